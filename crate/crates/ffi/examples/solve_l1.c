#include <stdio.h>
#include "psadla.h"

int main(void) {
    size_t sizes[2] = {200, 20};
    PsadlaProblem *problem = NULL;
    if (psadla_problem_generate(PSADLA_FAMILY_L1, sizes, 2, 1, &problem) != PSADLA_STATUS_OK) {
        fprintf(stderr, "%s\n", psadla_last_error_message());
        return 1;
    }
    PsadlaConfig cfg;
    psadla_config_default(&cfg);
    cfg.initial_level = -1000.0;
    double x0[20];
    for (int i = 0; i < 20; i++) x0[i] = 1.0;
    PsadlaRun *run = NULL;
    if (psadla_solve(problem, &cfg, x0, 20, &run) != PSADLA_STATUS_OK) {
        fprintf(stderr, "%s\n", psadla_last_error_message());
        psadla_problem_free(problem);
        return 1;
    }
    double best, level;
    int has_level;
    psadla_run_summary(run, &best, &level, &has_level);
    printf("iterations %zu best %.3e level %.3e\n", psadla_run_iterations(run), best, level);
    psadla_run_free(run);
    psadla_problem_free(problem);
    return 0;
}

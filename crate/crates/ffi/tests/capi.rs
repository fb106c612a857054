use std::ffi::{c_int, CStr, CString};
use std::ptr;

use psadla_ffi::*;

fn last_error() -> String {
    let p = psadla_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn generate(family: PsadlaFamily, sizes: &[usize], seed: u64) -> *mut PsadlaProblem {
    let mut p = ptr::null_mut();
    let st = unsafe { psadla_problem_generate(family, sizes.as_ptr(), sizes.len(), seed, &mut p) };
    assert_eq!(st, PsadlaStatus::Ok);
    assert!(!p.is_null());
    p
}

fn default_config() -> PsadlaConfig {
    let mut cfg = std::mem::MaybeUninit::uninit();
    assert_eq!(
        unsafe { psadla_config_default(cfg.as_mut_ptr()) },
        PsadlaStatus::Ok
    );
    unsafe { cfg.assume_init() }
}

#[test]
fn defaults_match_core() {
    let cfg = default_config();
    assert_eq!(cfg.method, PsadlaMethod::Psadla);
    assert_eq!(cfg.gamma, 0.5);
    assert_eq!(cfg.gamma_bar, 1.0);
    assert_eq!(cfg.stop_gap, 1e-6);
    assert_eq!(cfg.max_iters, 1000);
    assert_eq!(cfg.approximate, 0);
}

#[test]
fn l1_solve_through_handles() {
    let problem = generate(PsadlaFamily::L1, &[60, 10], 3);
    let mut dim = 0;
    assert_eq!(
        unsafe { psadla_problem_dim(problem, &mut dim) },
        PsadlaStatus::Ok
    );
    assert_eq!(dim, 10);

    let mut fstar = 1.0;
    let mut has = 0;
    assert_eq!(
        unsafe { psadla_problem_known_fstar(problem, &mut fstar, &mut has) },
        PsadlaStatus::Ok
    );
    assert_eq!((fstar, has), (0.0, 1));

    let mut cfg = default_config();
    cfg.initial_level = -100.0;
    cfg.max_iters = 300;
    let x0 = vec![1.0; dim];
    let mut run = ptr::null_mut();
    let st = unsafe { psadla_solve(problem, &cfg, x0.as_ptr(), dim, &mut run) };
    assert_eq!(st, PsadlaStatus::Ok);

    let n = unsafe { psadla_run_iterations(run) };
    assert!(n > 0 && n <= 300);
    let mut rec = PsadlaTraceRecord::default();
    assert_eq!(
        unsafe { psadla_run_trace_record(run, 0, &mut rec) },
        PsadlaStatus::Ok
    );
    assert_eq!(rec.iter, 0);
    assert_eq!(rec.has_level, 1);
    assert_eq!(rec.level, -100.0);
    assert_eq!(
        unsafe { psadla_run_trace_record(run, n, &mut rec) },
        PsadlaStatus::InvalidArgument
    );
    assert!(last_error().contains("out of range"));

    let (mut best, mut level, mut has_level) = (0.0, 0.0, 0);
    assert_eq!(
        unsafe { psadla_run_summary(run, &mut best, &mut level, &mut has_level) },
        PsadlaStatus::Ok
    );
    assert_eq!(has_level, 1);
    assert!((0.0..1.0).contains(&best), "{best}");
    assert!(level <= best);

    let adjustments = unsafe { psadla_run_adjustment_count(run) };
    assert!(adjustments > 0);
    let (mut it, mut old, mut new) = (0, 0.0, 0.0);
    assert_eq!(
        unsafe { psadla_run_adjustment(run, 0, &mut it, &mut old, &mut new) },
        PsadlaStatus::Ok
    );
    assert_eq!(old, -100.0);
    assert!(new > old);

    let mut point = vec![0.0; dim];
    assert_eq!(
        unsafe { psadla_run_best_point(run, point.as_mut_ptr(), dim) },
        PsadlaStatus::Ok
    );
    let mut value = 0.0;
    let mut grad = vec![0.0; dim];
    assert_eq!(
        unsafe {
            psadla_problem_evaluate(problem, point.as_ptr(), dim, &mut value, grad.as_mut_ptr())
        },
        PsadlaStatus::Ok
    );
    assert_eq!(value, best);

    let mut reason = PsadlaStopReason::WindowLimit;
    assert_eq!(
        unsafe { psadla_run_stop_reason(run, &mut reason) },
        PsadlaStatus::Ok
    );
    assert!(matches!(
        reason,
        PsadlaStopReason::GapMet | PsadlaStopReason::MaxIters
    ));

    unsafe {
        psadla_run_free(run);
        psadla_problem_free(problem);
    }
}

#[test]
fn identical_calls_give_identical_traces() {
    let problem = generate(PsadlaFamily::Gap, &[2, 8], 1);
    let mut cfg = default_config();
    cfg.initial_level = 2000.0;
    cfg.max_iters = 80;
    let x0 = [0.0, 0.0];
    let runs: Vec<*mut PsadlaRun> = (0..2)
        .map(|_| {
            let mut run = ptr::null_mut();
            assert_eq!(
                unsafe { psadla_solve(problem, &cfg, x0.as_ptr(), 2, &mut run) },
                PsadlaStatus::Ok
            );
            run
        })
        .collect();
    let n = unsafe { psadla_run_iterations(runs[0]) };
    assert_eq!(n, unsafe { psadla_run_iterations(runs[1]) });
    for i in 0..n {
        let mut a = PsadlaTraceRecord::default();
        let mut b = PsadlaTraceRecord::default();
        unsafe {
            psadla_run_trace_record(runs[0], i, &mut a);
            psadla_run_trace_record(runs[1], i, &mut b);
        }
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.level.to_bits(), b.level.to_bits());
        assert_eq!(a.stepsize.to_bits(), b.stepsize.to_bits());
    }
    let mut is_max = 0;
    assert_eq!(
        unsafe { psadla_problem_is_maximization(problem, &mut is_max) },
        PsadlaStatus::Ok
    );
    assert_eq!(is_max, 1);
    unsafe {
        for r in runs {
            psadla_run_free(r);
        }
        psadla_problem_free(problem);
    }
}

#[test]
fn json_round_trip() {
    let problem = generate(PsadlaFamily::Transport, &[3, 4, 2], 5);
    let mut text = ptr::null_mut();
    assert_eq!(
        unsafe { psadla_problem_to_json(problem, &mut text) },
        PsadlaStatus::Ok
    );
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { psadla_problem_from_json(text, &mut back) },
        PsadlaStatus::Ok
    );
    let mut again = ptr::null_mut();
    assert_eq!(
        unsafe { psadla_problem_to_json(back, &mut again) },
        PsadlaStatus::Ok
    );
    unsafe {
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(again));
        psadla_string_free(text);
        psadla_string_free(again);
        psadla_problem_free(problem);
        psadla_problem_free(back);
    }
}

#[test]
fn orlib_text_and_parse_errors() {
    let text = CString::new("2 2\n1 2\n3 4\n1 1\n1 1\n2 2\n").unwrap();
    let name = CString::new("d201600").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { psadla_problem_parse_orlib(text.as_ptr(), name.as_ptr(), &mut p) },
        PsadlaStatus::Ok
    );
    let (mut f, mut has) = (0.0, 0);
    unsafe { psadla_problem_known_fstar(p, &mut f, &mut has) };
    assert_eq!((f, has), (97821.35, 1));
    unsafe { psadla_problem_free(p) };

    let bad = CString::new("2 2\n1 x\n").unwrap();
    let mut q = ptr::null_mut();
    assert_eq!(
        unsafe { psadla_problem_parse_orlib(bad.as_ptr(), ptr::null(), &mut q) },
        PsadlaStatus::ParseError
    );
    assert!(q.is_null());
    assert!(last_error().contains("line 2"), "{}", last_error());

    let json = CString::new("{\"schema_version\": 99}").unwrap();
    assert_ne!(
        unsafe { psadla_problem_from_json(json.as_ptr(), &mut q) },
        PsadlaStatus::Ok
    );
}

#[test]
fn argument_errors() {
    let problem = generate(PsadlaFamily::L1, &[5, 3], 0);
    let cfg = default_config();
    let mut run = ptr::null_mut();
    let x0 = [0.0; 2];
    assert_eq!(
        unsafe { psadla_solve(problem, &cfg, x0.as_ptr(), 2, &mut run) },
        PsadlaStatus::DimensionMismatch
    );
    assert_eq!(
        unsafe { psadla_solve(ptr::null(), &cfg, x0.as_ptr(), 2, &mut run) },
        PsadlaStatus::NullPointer
    );
    assert!(last_error().contains("problem"));
    let mut bad = cfg;
    bad.gamma = 1.5;
    let x0 = [0.0; 3];
    assert_eq!(
        unsafe { psadla_solve(problem, &bad, x0.as_ptr(), 3, &mut run) },
        PsadlaStatus::InvalidArgument
    );
    let nan = [f64::NAN, 0.0, 0.0];
    assert_eq!(
        unsafe { psadla_solve(problem, &cfg, nan.as_ptr(), 3, &mut run) },
        PsadlaStatus::NonFinite
    );
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { psadla_problem_generate(PsadlaFamily::Gap, [2usize].as_ptr(), 1, 0, &mut p) },
        PsadlaStatus::InvalidArgument
    );
    assert_eq!(unsafe { psadla_run_iterations(ptr::null()) }, 0);
    unsafe {
        psadla_run_free(ptr::null_mut());
        psadla_problem_free(ptr::null_mut());
        psadla_string_free(ptr::null_mut());
        psadla_problem_free(problem);
    }
}

#[test]
fn feasibility_check() {
    // x <= 1 and -x <= -2 has no solution
    let normals = [1.0, -1.0];
    let rhs = [1.0, -2.0];
    let mut feasible: c_int = -1;
    let st = unsafe {
        psadla_check_feasible(
            normals.as_ptr(),
            rhs.as_ptr(),
            2,
            1,
            PsadlaDomain::Unconstrained,
            1e-9,
            &mut feasible,
            ptr::null_mut(),
        )
    };
    assert_eq!(st, PsadlaStatus::Ok);
    assert_eq!(feasible, 0);

    // x + y <= -1 is infeasible on the orthant but not in the plane
    let normals = [1.0, 1.0];
    let rhs = [-1.0];
    let mut witness = [f64::NAN; 2];
    unsafe {
        psadla_check_feasible(
            normals.as_ptr(),
            rhs.as_ptr(),
            1,
            2,
            PsadlaDomain::NonNegative,
            1e-9,
            &mut feasible,
            witness.as_mut_ptr(),
        )
    };
    assert_eq!(feasible, 0);
    unsafe {
        psadla_check_feasible(
            normals.as_ptr(),
            rhs.as_ptr(),
            1,
            2,
            PsadlaDomain::Unconstrained,
            1e-9,
            &mut feasible,
            witness.as_mut_ptr(),
        )
    };
    assert_eq!(feasible, 1);
    assert!(witness[0] + witness[1] <= -1.0 + 1e-9, "{witness:?}");
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/psadla.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 20);
    for name in exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    assert!(header.contains("typedef struct PsadlaProblem PsadlaProblem;"));
    assert!(header.contains("PSADLA_STATUS_NULL_POINTER = 9"));
}

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use reverting_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rv_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn exact_clock_pmf_round_trip() {
    unsafe {
        let mut pmf = ptr::null_mut();
        assert_eq!(rv_clock_pmf(4, 0.0, &mut pmf), RvStatus::Ok);
        assert_eq!(rv_pmf_is_exact(pmf), 1);

        let (mut lo, mut hi, mut len) = (0i64, 0i64, 0usize);
        assert_eq!(rv_pmf_support(pmf, &mut lo, &mut hi, &mut len), RvStatus::Ok);
        assert_eq!((lo, hi, len), (1, 3, 3));

        let mut probs = [0.0; 3];
        assert_eq!(rv_pmf_probs(pmf, probs.as_mut_ptr(), 3), RvStatus::Ok);
        assert!((probs[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((probs[1] - 0.5).abs() < 1e-15);

        let mut needed = 0usize;
        assert_eq!(
            rv_pmf_exact_prob(pmf, 3, ptr::null_mut(), 0, &mut needed),
            RvStatus::BufferTooSmall
        );
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(rv_pmf_exact_prob(pmf, 3, buf.as_mut_ptr(), needed, ptr::null_mut()), RvStatus::Ok);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "1/6");

        let mut small = [0.0; 2];
        assert_eq!(rv_pmf_probs(pmf, small.as_mut_ptr(), 2), RvStatus::BufferTooSmall);
        rv_pmf_free(pmf);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut pmf = ptr::null_mut();
        assert_eq!(rv_clock_pmf(0, 0.0, &mut pmf), RvStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert!(pmf.is_null());

        assert_eq!(rv_clock_pmf(40, 0.0, &mut pmf), RvStatus::SizeLimit);
        assert_eq!(rv_clock_pmf(4, 0.0, ptr::null_mut()), RvStatus::NullPointer);
        assert_eq!(rv_occasional_pmf(5, 1.5, 0.0, &mut pmf), RvStatus::InvalidArgument);

        let bad = [0.5, 0.4];
        let mut law = ptr::null_mut();
        assert_eq!(rv_offspring_new(bad.as_ptr(), 2, &mut law), RvStatus::InvalidArgument);

        let mut v = 0.0;
        assert_eq!(rv_martingale_variance(10, &mut v), RvStatus::Ok);
        assert!(last_error().is_empty());
    }
}

#[test]
fn numeric_entry_points_agree_with_library() {
    unsafe {
        let (mut m, mut v) = (0.0, 0.0);
        assert_eq!(rv_clock_moments(10, &mut m, &mut v), RvStatus::Ok);
        let h9: f64 = (1..10).map(|k| 1.0 / k as f64).sum();
        assert!((m - h9).abs() < 1e-12);

        let (mut om, mut w, mut ov) = (0.0, 0.0, 0.0);
        assert_eq!(rv_occasional_moments(10, 1.0, &mut om, &mut w, &mut ov), RvStatus::Ok);
        assert!((om - m).abs() < 1e-12 && (ov - v).abs() < 1e-12);

        let mut cov = 0.0;
        assert_eq!(rv_clock_covariance(5, 3, &mut cov), RvStatus::Ok);
        assert!(cov > 0.0);

        let mut needed = 0;
        let mut buf = [0 as c_char; 32];
        assert_eq!(rv_stirling_first(5, 2, buf.as_mut_ptr(), buf.len(), &mut needed), RvStatus::Ok);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "50");
        assert_eq!(needed, 3);

        let mut g = 0.0;
        assert_eq!(rv_occasional_gf(0.5, 0.3, 0.25, &mut g), RvStatus::Ok);
        assert!(g.is_finite() && g > 0.0);
    }
}

#[test]
fn streams_replay_and_branching() {
    unsafe {
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(rv_stream_new(7, 1, &mut a), RvStatus::Ok);
        assert_eq!(rv_stream_new(7, 1, &mut b), RvStatus::Ok);
        let mut xa = [0u64; 50];
        let mut xb = [0u64; 50];
        assert_eq!(rv_simulate_clock(a, 50, xa.as_mut_ptr()), RvStatus::Ok);
        assert_eq!(rv_simulate_clock(b, 50, xb.as_mut_ptr()), RvStatus::Ok);
        assert_eq!(xa, xb);
        assert_eq!(xa[0], 0);
        assert!(xa.iter().enumerate().all(|(i, &t)| t <= i as u64));
        assert_eq!(rv_simulate_occasional(a, 50, 0.5, xa.as_mut_ptr()), RvStatus::Ok);
        rv_stream_free(a);
        rv_stream_free(b);

        let probs = [0.25, 0.25, 0.5];
        let mut law = ptr::null_mut();
        assert_eq!(rv_offspring_new(probs.as_ptr(), 3, &mut law), RvStatus::Ok);
        let (mut e, mut h0) = (0.0, 0.0);
        assert_eq!(rv_extinction_probability(law, 5, &mut e), RvStatus::Ok);
        assert_eq!(rv_reverting_gw_pgf(law, 5, 0.0, &mut h0), RvStatus::Ok);
        assert!((e - h0).abs() < 1e-12 && e > 0.0 && e < 1.0);
        rv_offspring_free(law);
    }
}

#[test]
fn verify_suite_through_c_string() {
    unsafe {
        let name = CString::new("walk").unwrap();
        let mut passed = 0;
        assert_eq!(rv_verify(name.as_ptr(), 1, &mut passed), RvStatus::Ok);
        assert_eq!(passed, 1);
        let bogus = CString::new("nope").unwrap();
        assert_eq!(rv_verify(bogus.as_ptr(), 1, &mut passed), RvStatus::InvalidArgument);
    }
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        rv_pmf_free(ptr::null_mut());
        rv_stream_free(ptr::null_mut());
        rv_offspring_free(ptr::null_mut());
        assert_eq!(rv_pmf_is_exact(ptr::null()), 0);
    }
}

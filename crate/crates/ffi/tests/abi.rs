use std::ffi::{c_char, CStr, CString};
use std::ptr;

use metamodel_ffi::*;

const INIT: &str = "0000000000000001000000000000000";
const TARGET: &str = "1101011001111101000000000000000";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    mm_string_free(s);
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(mm_last_error()).to_str().unwrap().to_owned() }
}

unsafe fn rule110() -> *mut MmSystem {
    let mut sys = ptr::null_mut();
    assert_eq!(mm_ca_system_new(110, c(INIT).as_ptr(), &mut sys), MmStatus::Ok);
    sys
}

#[test]
fn rule_110_through_the_abi() {
    unsafe {
        let sys = rule110();
        let mut p = 0usize;
        assert_eq!(mm_system_size(sys, &mut p), MmStatus::Ok);
        assert_eq!(p, 31);
        assert_eq!(mm_system_step(sys, 15), MmStatus::Ok);
        let mut t = 0u64;
        assert_eq!(mm_system_time(sys, &mut t), MmStatus::Ok);
        assert_eq!(t, 15);
        let mut s = ptr::null_mut();
        assert_eq!(mm_system_state(sys, &mut s), MmStatus::Ok);
        assert_eq!(take(s), TARGET);
        mm_system_free(sys);
    }
}

#[test]
fn amp_round_trip() {
    unsafe {
        let sys = rule110();
        let mut amp = ptr::null_mut();
        assert_eq!(mm_system_emit_amp(sys, 15, &mut amp), MmStatus::Ok);
        let amp = take(amp);
        assert!(amp.contains("update table 01101110"));
        let mut copy = ptr::null_mut();
        assert_eq!(mm_system_from_amp(c(&amp).as_ptr(), &mut copy), MmStatus::Ok);
        assert_eq!(mm_system_step(copy, 15), MmStatus::Ok);
        let mut s = ptr::null_mut();
        mm_system_state(copy, &mut s);
        assert_eq!(take(s), TARGET);
        let mut program = ptr::null_mut();
        assert_eq!(mm_system_generate_c(copy, 15, &mut program), MmStatus::Ok);
        assert!(take(program).contains("int main"));
        mm_system_free(copy);
        mm_system_free(sys);
    }
}

#[test]
fn search_and_enumerate() {
    unsafe {
        let (mut rule, mut attempts) = (0i32, 0u64);
        let status = mm_ca_search(c(INIT).as_ptr(), c(TARGET).as_ptr(), 15, 5000, 1, &mut rule, &mut attempts);
        assert_eq!(status, MmStatus::Ok);
        assert_eq!(rule, 110);
        assert!((1..=5000).contains(&attempts));

        let status = mm_ca_search(c(INIT).as_ptr(), c(TARGET).as_ptr(), 15, 1, 1, &mut rule, &mut attempts);
        assert_eq!(status, MmStatus::Ok);
        assert_eq!(attempts, 1);
        assert!(rule == -1 || rule == 110);

        let mut rules = [0u8; 256];
        let mut count = 0usize;
        let status = mm_ca_enumerate(c(INIT).as_ptr(), c(TARGET).as_ptr(), 15, rules.as_mut_ptr(), &mut count);
        assert_eq!(status, MmStatus::Ok);
        assert_eq!(&rules[..count], &[110]);
    }
}

#[test]
fn match_score_counts_agreement() {
    let mut m = 0.0;
    unsafe {
        assert_eq!(mm_match_score(c("0110").as_ptr(), c("0100").as_ptr(), &mut m), MmStatus::Ok);
    }
    assert_eq!(m, 0.75);
    unsafe {
        assert_eq!(mm_match_score(c("01").as_ptr(), c("010").as_ptr(), &mut m), MmStatus::ModelError);
    }
    assert!(!last_error().is_empty());
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut sys = ptr::null_mut();
        assert_eq!(mm_ca_system_new(256, c(INIT).as_ptr(), &mut sys), MmStatus::InvalidArgument);
        assert!(last_error().contains("256"), "{}", last_error());
        assert!(sys.is_null());
        assert_eq!(mm_ca_system_new(30, c("01x").as_ptr(), &mut sys), MmStatus::InvalidArgument);
        assert_eq!(mm_ca_system_new(30, ptr::null(), &mut sys), MmStatus::NullPointer);
        assert_eq!(mm_ca_system_new(30, c(INIT).as_ptr(), ptr::null_mut()), MmStatus::NullPointer);
        let bad = [0x30u8, 0xff, 0];
        assert_eq!(mm_ca_system_new(30, bad.as_ptr().cast(), &mut sys), MmStatus::InvalidUtf8);
        assert_eq!(mm_system_from_amp(c("").as_ptr(), &mut sys), MmStatus::ParseError);
        assert_eq!(mm_system_from_amp(c("amp 1\nkind x\n").as_ptr(), &mut sys), MmStatus::ParseError);
        let mut t = 0;
        assert_eq!(mm_system_time(ptr::null(), &mut t), MmStatus::NullPointer);
        assert_eq!(mm_system_step(ptr::null_mut(), 1), MmStatus::NullPointer);
        mm_system_free(ptr::null_mut());
        mm_string_free(ptr::null_mut());
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(mm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use cqf::*;
use cqf_core::fixtures;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    cqf_string_free(p);
    s
}

unsafe fn last_error() -> String {
    let p = cqf_last_error_message();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

unsafe fn el1() -> *mut CqfSchema {
    let mut s = ptr::null_mut();
    assert_eq!(cqf_schema_parse(c(fixtures::EL1).as_ptr(), &mut s), CqfStatus::Ok);
    s
}

#[test]
fn object_types_in_importance_order() {
    unsafe {
        let s = el1();
        let mut out = ptr::null_mut();
        assert_eq!(cqf_schema_object_types(s, &mut out), CqfStatus::Ok);
        let names = take(out);
        assert_eq!(names.lines().count(), 7);
        assert_eq!(names.lines().next(), Some("Election"));
        cqf_schema_free(s);
    }
}

#[test]
fn parse_errors_carry_messages() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(
            cqf_schema_parse(c("fact F: A \"x\" / \"y\" B\n").as_ptr(), &mut s),
            CqfStatus::Parse
        );
        assert!(s.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(cqf_schema_parse(c("# nothing\n").as_ptr(), &mut s), CqfStatus::Parse);
        assert!(last_error().contains("no object types"));
        assert_eq!(cqf_schema_parse(ptr::null(), &mut s), CqfStatus::NullArgument);
    }
}

#[test]
fn success_clears_the_last_error() {
    unsafe {
        let mut s = ptr::null_mut();
        cqf_schema_parse(ptr::null(), &mut s);
        assert!(!cqf_last_error_message().is_null());
        let s = el1();
        assert!(cqf_last_error_message().is_null());
        cqf_schema_free(s);
    }
}

#[test]
fn enumerator_drains_in_batches() {
    unsafe {
        let s = el1();
        let mut e = ptr::null_mut();
        assert_eq!(
            cqf_enumerator_open(s, c("President").as_ptr(), c("Election").as_ptr(), &mut e),
            CqfStatus::Ok
        );
        // the enumerator owns its schema reference
        cqf_schema_free(s);
        let mut lines = Vec::new();
        loop {
            let mut out = ptr::null_mut();
            assert_eq!(cqf_enumerator_next_batch(e, 1, &mut out), CqfStatus::Ok);
            let text = take(out);
            if text.is_empty() {
                break;
            }
            lines.push(text);
        }
        assert_eq!(lines[0], "1\tPresident winning election");
        assert_eq!(lines.len(), 2);
        assert_eq!(cqf_enumerator_is_exhausted(e), 1);
        let mut out = ptr::null_mut();
        assert_eq!(cqf_enumerator_next_batch(e, 0, &mut out), CqfStatus::Path);
        cqf_enumerator_free(e);
    }
}

#[test]
fn unknown_endpoints_are_path_errors() {
    unsafe {
        let s = el1();
        let mut e = ptr::null_mut();
        assert_eq!(
            cqf_enumerator_open(s, c("Senate").as_ptr(), c("Year").as_ptr(), &mut e),
            CqfStatus::Path
        );
        assert!(e.is_null());
        cqf_schema_free(s);
    }
}

#[test]
fn ppq_reproduces_the_session_string() {
    unsafe {
        let s = el1();
        let pts = [c("President"), c("Election"), c("NrOfVotes")];
        let ptrs: Vec<*const c_char> = pts.iter().map(|p| p.as_ptr()).collect();
        let mut out = ptr::null_mut();
        assert_eq!(cqf_ppq_run(s, ptrs.as_ptr(), 3, 5, &mut out), CqfStatus::Ok);
        assert_eq!(take(out), "President winning election which resulted in nr of votes");
        assert_eq!(cqf_ppq_run(s, ptrs.as_ptr(), 1, 5, &mut out), CqfStatus::Path);
        cqf_schema_free(s);
    }
}

#[test]
fn query_round_trip() {
    unsafe {
        let s = el1();
        let mut pop = ptr::null_mut();
        assert_eq!(
            cqf_population_parse(s, c(fixtures::P1).as_ptr(), &mut pop),
            CqfStatus::Ok
        );
        assert_eq!(cqf_population_fact_count(pop), 6);

        let mut q = ptr::null_mut();
        assert_eq!(
            cqf_query_parse(s, c("(count (atom FT3 fwd))").as_ptr(), &mut q),
            CqfStatus::Ok
        );
        let mut out = ptr::null_mut();
        assert_eq!(cqf_query_eval(q, pop, &mut out), CqfStatus::Ok);
        assert_eq!(take(out), "3");
        assert_eq!(cqf_query_sql(q, &mut out), CqfStatus::Ok);
        assert_eq!(
            take(out),
            "SELECT COUNT(*) FROM (SELECT DISTINCT t1.a AS head, t1.b AS tail FROM ft3 t1) t2;"
        );
        assert_eq!(cqf_query_verbalize(q, &mut out), CqfStatus::Ok);
        assert_eq!(take(out), "number of President winning election");
        cqf_query_free(q);

        let mut q = ptr::null_mut();
        assert_eq!(
            cqf_query_parse(s, c("(atom FT3 fwd FT4 fwd)").as_ptr(), &mut q),
            CqfStatus::Ok
        );
        assert_eq!(cqf_query_eval(q, pop, &mut out), CqfStatus::Ok);
        assert_eq!(
            take(out),
            "president\tnr of votes\nLincoln\t1866452\nLincoln\t2218388\n"
        );
        cqf_query_free(q);

        assert_eq!(
            cqf_query_parse(s, c("(atom FT3 fwd FT1 fwd)").as_ptr(), &mut q),
            CqfStatus::Query
        );
        cqf_population_free(pop);
        cqf_schema_free(s);
    }
}

#[test]
fn ddl_and_version() {
    unsafe {
        let s = el1();
        let mut out = ptr::null_mut();
        assert_eq!(cqf_schema_ddl(s, &mut out), CqfStatus::Ok);
        assert!(take(out).contains("CREATE TABLE ft3 (a TEXT, b INTEGER);"));
        cqf_schema_free(s);
        assert!(!CStr::from_ptr(cqf_version()).to_bytes().is_empty());
    }
}

#[test]
fn null_handles_are_rejected() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(cqf_schema_object_types(ptr::null(), &mut out), CqfStatus::NullArgument);
        assert_eq!(cqf_query_sql(ptr::null(), &mut out), CqfStatus::NullArgument);
        assert_eq!(cqf_enumerator_is_exhausted(ptr::null()), 0);
        cqf_schema_free(ptr::null_mut());
        cqf_string_free(ptr::null_mut());
    }
}

//! C ABI over `cqf-core`.
//!
//! Every fallible function returns a [`CqfStatus`]; on failure the message
//! is available from [`cqf_last_error_message`] on the same thread. Handles
//! are opaque and released with their `_free` function. Strings handed out
//! through `char **out` parameters are owned by the caller and released with
//! [`cqf_string_free`]. Inputs are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use cqf_core::evaluator::{eval_expr, parse_population, EvalResult, Population};
use cqf_core::pathfinder::{run_ppq, PathEnumerator};
use cqf_core::querybuilder::{parse_query, validate_expr, verbalize_expr, QueryExpr};
use cqf_core::schema::{importance_order, name_phrase, parse_schema, validate_schema, SchemaGraph};
use cqf_core::sqlgen::{emit_ddl, emit_sql};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidSchema = 4,
    Path = 5,
    Query = 6,
    Eval = 7,
    Sql = 8,
    Panic = 99,
}

/// A parsed schema.
pub struct CqfSchema(Arc<SchemaGraph>);

/// A resumable path enumeration between two object types.
pub struct CqfEnumerator(PathEnumerator);

/// A fact population bound to the schema it was parsed against.
pub struct CqfPopulation(Population);

/// A parsed query expression bound to its schema.
pub struct CqfQuery {
    schema: Arc<SchemaGraph>,
    expr: QueryExpr,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Fail(CqfStatus, String);

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CqfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CqfStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CqfStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(CqfStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CqfStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(CqfStatus::NullArgument, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(CqfStatus::NullArgument, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s.replace('\0', " ")).expect("NULs removed");
    put(out, c.into_raw())
}

/// Message for the last failure on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn cqf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cqf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn cqf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates `.cqs` schema text.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cqf_schema_parse(source: *const c_char, out: *mut *mut CqfSchema) -> CqfStatus {
    guard(|| {
        let src = text(source, "source")?;
        let g = parse_schema(src).map_err(|e| Fail(CqfStatus::Parse, e.to_string()))?;
        let violations = validate_schema(&g);
        if !violations.is_empty() {
            let msg = violations.iter().map(|v| v.0.as_str()).collect::<Vec<_>>().join("\n");
            return Err(Fail(CqfStatus::InvalidSchema, msg));
        }
        put(out, Box::into_raw(Box::new(CqfSchema(Arc::new(g)))))
    })
}

/// # Safety
/// `schema` must be NULL or a handle from [`cqf_schema_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn cqf_schema_free(schema: *mut CqfSchema) {
    if !schema.is_null() {
        drop(Box::from_raw(schema));
    }
}

/// Object type names in importance order, one per line.
///
/// # Safety
/// `schema` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cqf_schema_object_types(schema: *const CqfSchema, out: *mut *mut c_char) -> CqfStatus {
    guard(|| {
        let g = &handle(schema, "schema")?.0;
        let names: Vec<String> = importance_order(g).into_iter().map(|id| id.0).collect();
        put_string(out, names.join("\n"))
    })
}

/// `CREATE TABLE` statements for the schema.
///
/// # Safety
/// `schema` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cqf_schema_ddl(schema: *const CqfSchema, out: *mut *mut c_char) -> CqfStatus {
    guard(|| {
        let g = &handle(schema, "schema")?.0;
        let ddl = emit_ddl(g).map_err(|e| Fail(CqfStatus::Sql, e.to_string()))?;
        put_string(out, ddl)
    })
}

/// Opens a path enumeration between two object types.
///
/// # Safety
/// `schema` must be a live handle, `from`/`to` NUL-terminated strings and
/// `out` writable. The enumerator keeps the schema alive on its own.
#[no_mangle]
pub unsafe extern "C" fn cqf_enumerator_open(
    schema: *const CqfSchema,
    from: *const c_char,
    to: *const c_char,
    out: *mut *mut CqfEnumerator,
) -> CqfStatus {
    guard(|| {
        let g = &handle(schema, "schema")?.0;
        let from = g
            .resolve(text(from, "from")?)
            .map_err(|e| Fail(CqfStatus::Path, e.to_string()))?;
        let to = g
            .resolve(text(to, "to")?)
            .map_err(|e| Fail(CqfStatus::Path, e.to_string()))?;
        let e = PathEnumerator::open(Arc::clone(g), &from, &to).map_err(|e| Fail(CqfStatus::Path, e.to_string()))?;
        put(out, Box::into_raw(Box::new(CqfEnumerator(e))))
    })
}

/// Next at most `batch` paths as `weight<TAB>verbalization` lines. An
/// empty string means the enumeration is exhausted.
///
/// # Safety
/// `e` must be a live enumerator used from one thread at a time; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn cqf_enumerator_next_batch(
    e: *mut CqfEnumerator,
    batch: usize,
    out: *mut *mut c_char,
) -> CqfStatus {
    guard(|| {
        let e = e
            .as_mut()
            .ok_or_else(|| Fail(CqfStatus::NullArgument, "enumerator is null".into()))?;
        let paths =
            e.0.next_batch(batch)
                .map_err(|err| Fail(CqfStatus::Path, err.to_string()))?;
        let lines: Vec<String> = paths
            .iter()
            .map(|p| format!("{}\t{}", p.weight, p.verbalization))
            .collect();
        put_string(out, lines.join("\n"))
    })
}

/// 1 when no further paths exist, 0 otherwise (also 0 for NULL).
///
/// # Safety
/// `e` must be NULL or a live enumerator.
#[no_mangle]
pub unsafe extern "C" fn cqf_enumerator_is_exhausted(e: *const CqfEnumerator) -> i32 {
    e.as_ref().map_or(0, |e| i32::from(e.0.is_exhausted()))
}

/// # Safety
/// `e` must be NULL or a handle from [`cqf_enumerator_open`], freed once.
#[no_mangle]
pub unsafe extern "C" fn cqf_enumerator_free(e: *mut CqfEnumerator) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Point-to-point query over `count` points; writes the verbalization of
/// the best connecting path.
///
/// # Safety
/// `points` must hold `count` NUL-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cqf_ppq_run(
    schema: *const CqfSchema,
    points: *const *const c_char,
    count: usize,
    batch: usize,
    out: *mut *mut c_char,
) -> CqfStatus {
    guard(|| {
        let g = &handle(schema, "schema")?.0;
        if points.is_null() && count > 0 {
            return Err(Fail(CqfStatus::NullArgument, "points is null".into()));
        }
        let raw = if count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(points, count)
        };
        let mut ids = Vec::with_capacity(count);
        for (i, p) in raw.iter().enumerate() {
            let name = text(*p, &format!("points[{i}]"))?;
            ids.push(g.resolve(name).map_err(|e| Fail(CqfStatus::Path, e.to_string()))?);
        }
        let r = run_ppq(Arc::clone(g), &ids, batch).map_err(|e| Fail(CqfStatus::Path, e.to_string()))?;
        let p = r.selected_path(g).map_err(|e| Fail(CqfStatus::Path, e.to_string()))?;
        let text = cqf_core::schema::verbalize_path(g, &p).map_err(|e| Fail(CqfStatus::Path, e.to_string()))?;
        put_string(out, text)
    })
}

/// Parses `.cqp` population text against a schema.
///
/// # Safety
/// `schema` must be a live handle, `source` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cqf_population_parse(
    schema: *const CqfSchema,
    source: *const c_char,
    out: *mut *mut CqfPopulation,
) -> CqfStatus {
    guard(|| {
        let g = &handle(schema, "schema")?.0;
        let pop = parse_population(text(source, "source")?, g).map_err(|e| Fail(CqfStatus::Parse, e.to_string()))?;
        put(out, Box::into_raw(Box::new(CqfPopulation(pop))))
    })
}

/// Number of facts in a population (0 for NULL).
///
/// # Safety
/// `pop` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cqf_population_fact_count(pop: *const CqfPopulation) -> usize {
    pop.as_ref().map_or(0, |p| p.0.fact_count())
}

/// # Safety
/// `pop` must be NULL or a handle from [`cqf_population_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn cqf_population_free(pop: *mut CqfPopulation) {
    if !pop.is_null() {
        drop(Box::from_raw(pop));
    }
}

/// Parses and type-checks query text.
///
/// # Safety
/// `schema` must be a live handle, `source` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cqf_query_parse(
    schema: *const CqfSchema,
    source: *const c_char,
    out: *mut *mut CqfQuery,
) -> CqfStatus {
    guard(|| {
        let g = &handle(schema, "schema")?.0;
        let expr = parse_query(g, text(source, "source")?).map_err(|e| Fail(CqfStatus::Query, e.to_string()))?;
        let violations = validate_expr(g, &expr);
        if !violations.is_empty() {
            let msg = violations.iter().map(|v| v.0.as_str()).collect::<Vec<_>>().join("\n");
            return Err(Fail(CqfStatus::Query, msg));
        }
        put(
            out,
            Box::into_raw(Box::new(CqfQuery {
                schema: Arc::clone(g),
                expr,
            })),
        )
    })
}

/// # Safety
/// `q` must be NULL or a handle from [`cqf_query_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn cqf_query_free(q: *mut CqfQuery) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Natural-language rendering of a query.
///
/// # Safety
/// `q` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cqf_query_verbalize(q: *const CqfQuery, out: *mut *mut c_char) -> CqfStatus {
    guard(|| {
        let q = handle(q, "query")?;
        let text = verbalize_expr(&q.schema, &q.expr).map_err(|e| Fail(CqfStatus::Query, e.to_string()))?;
        put_string(out, text)
    })
}

/// SQL for a query.
///
/// # Safety
/// `q` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cqf_query_sql(q: *const CqfQuery, out: *mut *mut c_char) -> CqfStatus {
    guard(|| {
        let q = handle(q, "query")?;
        let sql = emit_sql(&q.schema, &q.expr).map_err(|e| Fail(CqfStatus::Sql, e.to_string()))?;
        put_string(out, sql)
    })
}

/// Evaluates a query. Relations and tables come back as TSV with a header
/// line; counts as a bare number.
///
/// # Safety
/// `q` and `pop` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cqf_query_eval(
    q: *const CqfQuery,
    pop: *const CqfPopulation,
    out: *mut *mut c_char,
) -> CqfStatus {
    guard(|| {
        let q = handle(q, "query")?;
        let pop = &handle(pop, "population")?.0;
        let result = eval_expr(&q.schema, pop, &q.expr).map_err(|e| Fail(CqfStatus::Eval, e.to_string()))?;
        let text = match result {
            EvalResult::Count { count } => count.to_string(),
            EvalResult::Table(t) => t.to_tsv(),
            EvalResult::Relation(rel) => {
                let mut s = format!(
                    "{}\t{}\n",
                    name_phrase(rel.head_type.as_str()),
                    name_phrase(rel.tail_type.as_str())
                );
                for (a, b) in &rel.pairs {
                    s.push_str(&format!("{a}\t{b}\n"));
                }
                s
            }
        };
        put_string(out, text)
    })
}

//! C ABI over the `isoquant` calibrators.
//!
//! Every handle is opaque and owned by the caller once returned; release it
//! with the matching `*_free`. Functions return an [`IsoquantStatus`] and write
//! results through out-pointers, which are left untouched on failure. The
//! message for the most recent failure on the calling thread is available
//! from [`isoquant_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};

use isoquant::{fit_batch, CalibrationMap, Error, MapFile, MergeTree, PrefixState, QuantizationGrid, Sample};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoquantStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NoData = 3,
    NoModel = 4,
    OrderingViolation = 5,
    TooLarge = 6,
    Structural = 7,
    Format = 8,
    Utf8 = 9,
    Panic = 10,
}

pub struct IsoquantGrid(QuantizationGrid);
pub struct IsoquantMap(CalibrationMap);
pub struct IsoquantPrefix(PrefixState);
pub struct IsoquantTree(MergeTree);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<Vec<u8>>) {
    let mut bytes = message.into();
    bytes.retain(|&b| b != 0);
    let message = CString::new(bytes).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn fail(status: IsoquantStatus, message: impl Into<Vec<u8>>) -> IsoquantStatus {
    set_error(message);
    status
}

fn status_of(e: &Error) -> IsoquantStatus {
    match e {
        Error::InvalidInput(_) => IsoquantStatus::InvalidInput,
        Error::NoData => IsoquantStatus::NoData,
        Error::NoModel => IsoquantStatus::NoModel,
        Error::OrderingViolation { .. } => IsoquantStatus::OrderingViolation,
        Error::TooLarge(_) => IsoquantStatus::TooLarge,
        Error::Structural(_) => IsoquantStatus::Structural,
    }
}

fn from_core(e: Error) -> IsoquantStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `body`, turning a panic into `Panic` so it never crosses the ABI.
fn guard(body: impl FnOnce() -> IsoquantStatus + UnwindSafe) -> IsoquantStatus {
    catch_unwind(body).unwrap_or_else(|_| fail(IsoquantStatus::Panic, "internal panic"))
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(IsoquantStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, IsoquantStatus> {
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(IsoquantStatus::Utf8, "string is not valid UTF-8"))
}

fn boxed<T>(value: T, out: *mut *mut T) -> IsoquantStatus {
    // SAFETY: callers check `out` for null first
    unsafe { *out = Box::into_raw(Box::new(value)) };
    IsoquantStatus::Ok
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Static description of a status code. Never null.
#[no_mangle]
pub extern "C" fn isoquant_status_str(status: IsoquantStatus) -> *const c_char {
    let s: &'static CStr = match status {
        IsoquantStatus::Ok => c"ok",
        IsoquantStatus::NullPointer => c"null pointer argument",
        IsoquantStatus::InvalidInput => c"invalid input",
        IsoquantStatus::NoData => c"no data",
        IsoquantStatus::NoModel => c"no model",
        IsoquantStatus::OrderingViolation => c"score below the previous one",
        IsoquantStatus::TooLarge => c"problem too large",
        IsoquantStatus::Structural => c"internal invariant broken",
        IsoquantStatus::Format => c"malformed map text",
        IsoquantStatus::Utf8 => c"string is not UTF-8",
        IsoquantStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Message for the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn isoquant_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn isoquant_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `levels=v1,v2,...` or `lattice=offset:step[:lo:hi]`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isoquant_grid_parse(spec: *const c_char, out: *mut *mut IsoquantGrid) -> IsoquantStatus {
    non_null!(spec, out);
    guard(|| {
        let spec = match read_str(spec) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match spec.parse::<QuantizationGrid>() {
            Ok(g) => boxed(IsoquantGrid(g), out),
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `grid` must come from [`isoquant_grid_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn isoquant_grid_free(grid: *mut IsoquantGrid) {
    free(grid)
}

/// Nearest grid level to `value`; ties go to the lower level.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isoquant_grid_project(grid: *const IsoquantGrid, value: f64, out: *mut f64) -> IsoquantStatus {
    non_null!(grid, out);
    match (*grid).0.project(value) {
        Ok(v) => {
            *out = v;
            IsoquantStatus::Ok
        }
        Err(e) => from_core(e),
    }
}

/// Batch fit of `n` samples. `weights` may be null for unit weights.
///
/// # Safety
/// `scores` and `targets` (and `weights` unless null) must point to `n`
/// readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isoquant_fit(
    grid: *const IsoquantGrid,
    scores: *const f64,
    targets: *const f64,
    weights: *const f64,
    n: usize,
    out: *mut *mut IsoquantMap,
) -> IsoquantStatus {
    non_null!(grid, out);
    if n > 0 {
        non_null!(scores, targets);
    }
    guard(|| {
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let w = if weights.is_null() { 1.0 } else { *weights.add(i) };
            match Sample::new(*scores.add(i), *targets.add(i), w) {
                Ok(s) => samples.push(s),
                Err(e) => return from_core(e),
            }
        }
        match fit_batch(&samples, &(*grid).0) {
            Ok(m) => boxed(IsoquantMap(m), out),
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `map` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn isoquant_map_free(map: *mut IsoquantMap) {
    free(map)
}

/// Calibrated value for `score`.
///
/// # Safety
/// `map` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isoquant_map_evaluate(map: *const IsoquantMap, score: f64, out: *mut f64) -> IsoquantStatus {
    non_null!(map, out);
    match (*map).0.evaluate(score) {
        Ok(v) => {
            *out = v;
            IsoquantStatus::Ok
        }
        Err(e) => from_core(e),
    }
}

/// Number of constant pieces in the map.
///
/// # Safety
/// `map` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn isoquant_map_len(map: *const IsoquantMap) -> usize {
    if map.is_null() {
        0
    } else {
        (*map).0.len()
    }
}

/// Serializes the map to its canonical text form. Free the result with
/// [`isoquant_string_free`].
///
/// # Safety
/// `map` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isoquant_map_to_text(map: *const IsoquantMap, out: *mut *mut c_char) -> IsoquantStatus {
    non_null!(map, out);
    guard(|| {
        let text = MapFile::from_map(&(*map).0).to_text();
        // the format never contains NUL
        *out = CString::new(text).expect("map text has no NUL").into_raw();
        IsoquantStatus::Ok
    })
}

/// Loads a map from text written by [`isoquant_map_to_text`] or the CLI.
///
/// # Safety
/// `text` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isoquant_map_from_text(text: *const c_char, out: *mut *mut IsoquantMap) -> IsoquantStatus {
    non_null!(text, out);
    guard(|| {
        let text = match read_str(text) {
            Ok(s) => s,
            Err(st) => return st,
        };
        let file = match MapFile::parse(text) {
            Ok(f) => f,
            Err(e) => return fail(IsoquantStatus::Format, e.to_string()),
        };
        match file.to_map() {
            Ok(m) => boxed(IsoquantMap(m), out),
            Err(e) => from_core(e),
        }
    })
}

/// Streaming calibrator for nondecreasing scores.
///
/// # Safety
/// `grid` must be a live handle and `out` writable. The grid is copied.
#[no_mangle]
pub unsafe extern "C" fn isoquant_prefix_new(grid: *const IsoquantGrid, out: *mut *mut IsoquantPrefix) -> IsoquantStatus {
    non_null!(grid, out);
    boxed(IsoquantPrefix(PrefixState::new((*grid).0.clone())), out)
}

/// # Safety
/// `state` must come from [`isoquant_prefix_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn isoquant_prefix_free(state: *mut IsoquantPrefix) {
    free(state)
}

/// Appends one sample. A score below the previous one yields
/// `ORDERING_VIOLATION` and leaves the state unchanged.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn isoquant_prefix_push(
    state: *mut IsoquantPrefix,
    score: f64,
    target: f64,
    weight: f64,
) -> IsoquantStatus {
    non_null!(state);
    let state = &mut (*state).0;
    guard(std::panic::AssertUnwindSafe(|| {
        match Sample::new(score, target, weight).and_then(|s| state.push(s)) {
            Ok(()) => IsoquantStatus::Ok,
            Err(e) => from_core(e),
        }
    }))
}

/// Detached copy of the current fit.
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isoquant_prefix_snapshot(
    state: *const IsoquantPrefix,
    out: *mut *mut IsoquantMap,
) -> IsoquantStatus {
    non_null!(state, out);
    guard(|| match (*state).0.snapshot() {
        Ok(m) => boxed(IsoquantMap(m), out),
        Err(e) => from_core(e),
    })
}

/// Streaming calibrator for scores in any order.
///
/// # Safety
/// `grid` must be a live handle and `out` writable. The grid is copied.
#[no_mangle]
pub unsafe extern "C" fn isoquant_tree_new(grid: *const IsoquantGrid, out: *mut *mut IsoquantTree) -> IsoquantStatus {
    non_null!(grid, out);
    boxed(IsoquantTree(MergeTree::new((*grid).0.clone())), out)
}

/// # Safety
/// `tree` must come from [`isoquant_tree_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn isoquant_tree_free(tree: *mut IsoquantTree) {
    free(tree)
}

/// Inserts one sample.
///
/// # Safety
/// `tree` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn isoquant_tree_insert(
    tree: *mut IsoquantTree,
    score: f64,
    target: f64,
    weight: f64,
) -> IsoquantStatus {
    non_null!(tree);
    let tree = &mut (*tree).0;
    guard(std::panic::AssertUnwindSafe(|| {
        match Sample::new(score, target, weight).and_then(|s| tree.insert(s)) {
            Ok(_) => IsoquantStatus::Ok,
            Err(e) => from_core(e),
        }
    }))
}

/// Detached copy of the fit over every inserted sample.
///
/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn isoquant_tree_snapshot(tree: *const IsoquantTree, out: *mut *mut IsoquantMap) -> IsoquantStatus {
    non_null!(tree, out);
    guard(|| match (*tree).0.root_map() {
        Ok(m) => boxed(IsoquantMap(m), out),
        Err(e) => from_core(e),
    })
}

/// Number of levels in the tree; 0 when empty or null.
///
/// # Safety
/// `tree` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn isoquant_tree_depth(tree: *const IsoquantTree) -> u32 {
    if tree.is_null() {
        0
    } else {
        (*tree).0.depth()
    }
}

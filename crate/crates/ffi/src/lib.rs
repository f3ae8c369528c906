//! C interface to the floatdet detector.
//!
//! All objects are opaque handles created by `fd_*_new` (or `fd_image_load`,
//! `fd_run_frame`) and released by the matching `fd_*_free`. Fallible calls
//! return an [`FdStatus`]; on failure the message is available from
//! [`fd_last_error_message`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use floatdet::imaging::load_frame;
use floatdet::pipeline::{run_frame, FrameResult, PipelineConfig};
use floatdet::{Error, ImageBuffer};

/// Return code of every fallible call. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Decode = 4,
    ImageTooSmall = 5,
    Numerical = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// Planar image with values on the [0, 255] scale.
pub struct FdImage {
    inner: ImageBuffer,
}

pub struct FdConfig {
    inner: PipelineConfig,
}

pub struct FdResult {
    inner: FrameResult,
}

/// One detection box in level-0 pixel coordinates.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FdBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub log_nfa: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> FdStatus {
    match err {
        Error::Stage { source, .. } => status_of(source),
        Error::Unreadable { .. } | Error::Io { .. } => FdStatus::Io,
        Error::Decode { .. } | Error::UnsupportedFormat { .. } | Error::Format { .. } => {
            FdStatus::Decode
        }
        Error::EmptyImage
        | Error::TooManyScales { .. }
        | Error::PatchTooLarge { .. }
        | Error::PlaneTooSmall { .. }
        | Error::NotEnoughPatches { .. } => FdStatus::ImageTooSmall,
        Error::NonFinite
        | Error::ZeroVariance
        | Error::TooFewSamples { .. }
        | Error::NotNormalized(_) => FdStatus::Numerical,
        _ => FdStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), FdStatus>) -> FdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FdStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            FdStatus::Panic
        }
    }
}

fn fail(err: Error) -> FdStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> FdStatus {
    set_error(format!("null pointer: {what}"));
    FdStatus::NullPointer
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, FdStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        FdStatus::InvalidArgument
    })
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `width * height * channels` planar samples into a new image.
///
/// # Safety
/// `data` must point to that many readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_image_new(
    width: u32,
    height: u32,
    channels: u32,
    data: *const f64,
    out: *mut *mut FdImage,
) -> FdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if data.is_null() {
            return Err(null("data"));
        }
        let len = (width as usize)
            .checked_mul(height as usize)
            .and_then(|n| n.checked_mul(channels as usize))
            .ok_or_else(|| fail(Error::InvalidBuffer("size overflow".into())))?;
        let samples = std::slice::from_raw_parts(data, len).to_vec();
        let img = ImageBuffer::new(width as usize, height as usize, channels as usize, samples)
            .map_err(fail)?;
        *out = Box::into_raw(Box::new(FdImage { inner: img }));
        Ok(())
    })
}

/// Decodes a PNG/PGM/PPM file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_image_load(path: *const c_char, out: *mut *mut FdImage) -> FdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = c_str(path, "path")?;
        let img = load_frame(path).map_err(fail)?;
        *out = Box::into_raw(Box::new(FdImage { inner: img }));
        Ok(())
    })
}

/// # Safety
/// `img` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fd_image_free(img: *mut FdImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Writes width, height and channel count; any output pointer may be NULL.
///
/// # Safety
/// `img` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_image_dims(
    img: *const FdImage,
    width: *mut u32,
    height: *mut u32,
    channels: *mut u32,
) -> FdStatus {
    guard(|| {
        let img = img.as_ref().ok_or_else(|| null("img"))?;
        if let Some(w) = width.as_mut() {
            *w = img.inner.width() as u32;
        }
        if let Some(h) = height.as_mut() {
            *h = img.inner.height() as u32;
        }
        if let Some(c) = channels.as_mut() {
            *c = img.inner.channels() as u32;
        }
        Ok(())
    })
}

/// New configuration holding the defaults.
#[no_mangle]
pub extern "C" fn fd_config_new() -> *mut FdConfig {
    Box::into_raw(Box::new(FdConfig {
        inner: PipelineConfig::default(),
    }))
}

/// # Safety
/// `cfg` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fd_config_free(cfg: *mut FdConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Sets one option using the CLI flag name without dashes, e.g.
/// `("log-eps", "-2")` or `("radii", "1,2,3")`.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn fd_config_set(
    cfg: *mut FdConfig,
    key: *const c_char,
    value: *const c_char,
) -> FdStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let key = c_str(key, "key")?;
        let value = c_str(value, "value")?;
        cfg.inner.set(key, value).map_err(fail)
    })
}

/// Runs the full detector on one frame.
///
/// # Safety
/// `img` and `cfg` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fd_run_frame(
    img: *const FdImage,
    cfg: *const FdConfig,
    out: *mut *mut FdResult,
) -> FdStatus {
    guard(|| {
        let img = img.as_ref().ok_or_else(|| null("img"))?;
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let res = run_frame(&img.inner, &cfg.inner).map_err(fail)?;
        *out = Box::into_raw(Box::new(FdResult { inner: res }));
        Ok(())
    })
}

/// # Safety
/// `res` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fd_result_free(res: *mut FdResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Number of boxes; 0 for NULL.
///
/// # Safety
/// `res` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fd_result_box_count(res: *const FdResult) -> usize {
    res.as_ref().map_or(0, |r| r.inner.boxes.len())
}

/// Copies box `index` (in (y, x, w, h) order) into `out`.
///
/// # Safety
/// `res` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fd_result_box(
    res: *const FdResult,
    index: usize,
    out: *mut FdBox,
) -> FdStatus {
    guard(|| {
        let res = res.as_ref().ok_or_else(|| null("res"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let b = res.inner.boxes.get(index).ok_or_else(|| {
            set_error(format!(
                "box index {index} out of range ({} boxes)",
                res.inner.boxes.len()
            ));
            FdStatus::OutOfRange
        })?;
        *out = FdBox {
            x: b.x as u32,
            y: b.y as u32,
            w: b.w as u32,
            h: b.h as u32,
            log_nfa: b.score,
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_unwraps_stage() {
        let e = Error::Stage {
            stage: "pyramid",
            source: Box::new(Error::TooManyScales {
                requested: 4,
                max_feasible: 1,
            }),
        };
        assert_eq!(status_of(&e), FdStatus::ImageTooSmall);
    }
}

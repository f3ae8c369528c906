#ifndef FLOATDET_H
#define FLOATDET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Return code of every fallible call. Zero is success.
 */
typedef enum FdStatus {
  FdStatus_Ok = 0,
  FdStatus_NullPointer = 1,
  FdStatus_InvalidArgument = 2,
  FdStatus_Io = 3,
  FdStatus_Decode = 4,
  FdStatus_ImageTooSmall = 5,
  FdStatus_Numerical = 6,
  FdStatus_OutOfRange = 7,
  FdStatus_Panic = 8,
} FdStatus;

typedef struct FdConfig FdConfig;

/**
 * Planar image with values on the [0, 255] scale.
 */
typedef struct FdImage FdImage;

typedef struct FdResult FdResult;

/**
 * One detection box in level-0 pixel coordinates.
 */
typedef struct FdBox {
  uint32_t x;
  uint32_t y;
  uint32_t w;
  uint32_t h;
  double log_nfa;
} FdBox;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *fd_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fd_version(void);

/**
 * Copies `width * height * channels` planar samples into a new image.
 *
 * # Safety
 * `data` must point to that many readable doubles and `out` must be writable.
 */
enum FdStatus fd_image_new(uint32_t width,
                           uint32_t height,
                           uint32_t channels,
                           const double *data,
                           struct FdImage **out);

/**
 * Decodes a PNG/PGM/PPM file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` must be writable.
 */
enum FdStatus fd_image_load(const char *path, struct FdImage **out);

/**
 * # Safety
 * `img` must be NULL or a handle from this library not yet freed.
 */
void fd_image_free(struct FdImage *img);

/**
 * Writes width, height and channel count; any output pointer may be NULL.
 *
 * # Safety
 * `img` must be a live handle; non-NULL outputs must be writable.
 */
enum FdStatus fd_image_dims(const struct FdImage *img,
                            uint32_t *width,
                            uint32_t *height,
                            uint32_t *channels);

/**
 * New configuration holding the defaults.
 */
struct FdConfig *fd_config_new(void);

/**
 * # Safety
 * `cfg` must be NULL or a handle from this library not yet freed.
 */
void fd_config_free(struct FdConfig *cfg);

/**
 * Sets one option using the CLI flag name without dashes, e.g.
 * `("log-eps", "-2")` or `("radii", "1,2,3")`.
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum FdStatus fd_config_set(struct FdConfig *cfg, const char *key, const char *value);

/**
 * Runs the full detector on one frame.
 *
 * # Safety
 * `img` and `cfg` must be live handles and `out` writable.
 */
enum FdStatus fd_run_frame(const struct FdImage *img,
                           const struct FdConfig *cfg,
                           struct FdResult **out);

/**
 * # Safety
 * `res` must be NULL or a handle from this library not yet freed.
 */
void fd_result_free(struct FdResult *res);

/**
 * Number of boxes; 0 for NULL.
 *
 * # Safety
 * `res` must be NULL or a live handle.
 */
uintptr_t fd_result_box_count(const struct FdResult *res);

/**
 * Copies box `index` (in (y, x, w, h) order) into `out`.
 *
 * # Safety
 * `res` must be a live handle and `out` writable.
 */
enum FdStatus fd_result_box(const struct FdResult *res, uintptr_t index, struct FdBox *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLOATDET_H */

#ifndef MLGEN_H
#define MLGEN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum {
  MLGEN_STATUS_OK = 0,
  MLGEN_STATUS_NULL_ARGUMENT = 1,
  MLGEN_STATUS_INVALID_UTF8 = 2,
  MLGEN_STATUS_IO = 3,
  MLGEN_STATUS_INVALID_MODEL = 4,
  MLGEN_STATUS_INVALID_MAPPING = 5,
  MLGEN_STATUS_INVALID_COMMAND = 6,
  MLGEN_STATUS_EVAL_FAILED = 7,
  MLGEN_STATUS_GENERATE_FAILED = 8,
  /*
   The notebook was written, but warnings were raised in strict mode.
   */
  MLGEN_STATUS_STRICT_WARNINGS = 9,
  MLGEN_STATUS_PANIC = 10,
} MlgenStatus;

/*
 Opaque parsed mapping configuration.
 */
typedef struct MlgenMapping MlgenMapping;

/*
 Opaque loaded model.
 */
typedef struct MlgenModel MlgenModel;

/*
 Options for [`mlgen_generate`]. Null strings mean "not set".
 */
typedef struct {
  const char *machine;
  const char *kernel;
  /*
   External validator command; `{file}` is replaced by the output path.
   */
  const char *validate_cmd;
  bool strict;
} MlgenGenerateOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Loads a `*.model.json` file into `*out`.

 # Safety
 `path` must be a valid C string and `out` a valid pointer.
 */
MlgenStatus mlgen_model_load(const char *path, MlgenModel **out);

/*
 Parses a model from an in-memory JSON document into `*out`.

 # Safety
 `json` must be a valid C string and `out` a valid pointer.
 */
MlgenStatus mlgen_model_from_json(const char *json, MlgenModel **out);

/*
 Releases a model handle. Null is ignored.

 # Safety
 `model` must come from this library and not be used afterwards.
 */
void mlgen_model_free(MlgenModel *model);

/*
 Loads a mapping configuration file into `*out`.

 # Safety
 `path` must be a valid C string and `out` a valid pointer.
 */
MlgenStatus mlgen_mapping_load(const char *path, MlgenMapping **out);

/*
 Parses a mapping configuration from an in-memory JSON document.

 # Safety
 `json` must be a valid C string and `out` a valid pointer.
 */
MlgenStatus mlgen_mapping_from_json(const char *json, MlgenMapping **out);

/*
 Releases a mapping handle. Null is ignored.

 # Safety
 `mapping` must come from this library and not be used afterwards.
 */
void mlgen_mapping_free(MlgenMapping *mapping);

/*
 Generates the notebook at `out_path`. `options` may be null. When
 `report_json` is non-null it receives the generation report as JSON, also
 for [`MlgenStatus::StrictWarnings`].

 # Safety
 Handles must be live, strings valid C strings, `options` null or valid.
 */
MlgenStatus mlgen_generate(const MlgenModel *model,
                           const MlgenMapping *mapping,
                           const char *template_root,
                           const char *out_path,
                           const MlgenGenerateOptions *options,
                           char **report_json);

/*
 Runs the static checks. `*diagnostics_json` receives a JSON array of
 `{"subject", "message"}` objects and `*count` (if non-null) its length.

 # Safety
 Handles must be live, strings valid C strings, out pointers valid.
 */
MlgenStatus mlgen_check(const MlgenModel *model,
                        const MlgenMapping *mapping,
                        const char *template_root,
                        char **diagnostics_json,
                        size_t *count);

/*
 Evaluates one model command with `block` (a qualified name) as `THIS`.
 `mapping` and `template_root` are optional together; when given,
 predecessor snippets are rendered so `OUTPUT` resolves. Text results are
 returned verbatim, list results as a JSON array.

 # Safety
 Handles must be live or null as documented, strings valid C strings.
 */
MlgenStatus mlgen_eval(const MlgenModel *model,
                       const char *block,
                       const char *command,
                       const MlgenMapping *mapping,
                       const char *template_root,
                       char **value);

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next call into this library on the same thread.
 */
const char *mlgen_last_error_message(void);

/*
 Releases a string returned through a `char **` parameter. Null is ignored.

 # Safety
 `s` must come from this library and not be used afterwards.
 */
void mlgen_string_free(char *s);

/*
 Library version as a static string.
 */
const char *mlgen_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MLGEN_H */

/* Copyright 2026 The Isoharness Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Calling convention between the harness and a target library.
 *
 * Every function a manifest declares is exported under its symbol name with
 * the isoh_entry_fn signature. Arguments arrive in manifest order; a
 * nonzero return is the managed error channel, zero is success. Handle,
 * int and float results are written to *ret.
 *
 * Plain C so that targets can be built with any toolchain. See
 * docs/instrumentation.md.
 */

#ifndef ISOHARNESS_TARGET_ABI_H_
#define ISOHARNESS_TARGET_ABI_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum isoh_kind {
  ISOH_NULL = 0,
  ISOH_INT = 1,
  ISOH_FLOAT = 2,
  ISOH_BYTES = 3,
  ISOH_ENUM = 4,
  ISOH_HANDLE = 5,
};

typedef struct isoh_value {
  int32_t kind; /* enum isoh_kind */
  int64_t i;    /* ISOH_INT, ISOH_ENUM */
  double f;     /* ISOH_FLOAT */
  const uint8_t* bytes; /* ISOH_BYTES; valid for the duration of the call */
  uint64_t len;
  void* handle; /* ISOH_HANDLE; NULL for a null handle */
} isoh_value;

typedef int32_t (*isoh_entry_fn)(const isoh_value* args, uint32_t nargs,
                                 isoh_value* ret);

/* Optional lifecycle hooks named by setup_symbol / teardown_symbol. */
typedef void (*isoh_lifecycle_fn)(void);

/* Exported by instrumented targets (see isoharness/shim.h). The harness
 * calls it once, before setup and before any entry point. */
typedef void (*isoh_shim_attach_fn)(uint64_t* counters, uint32_t count);
#define ISOH_SHIM_ATTACH_SYMBOL "isoharness_shim_attach"

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ISOHARNESS_TARGET_ABI_H_ */

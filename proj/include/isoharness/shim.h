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

/* Edge-coverage runtime for instrumented targets.
 *
 * Include from exactly one translation unit of the target library and call
 * edge_hit(i) on every control-flow edge. The harness attaches the counter
 * array before the first call; until then edge_hit is a no-op that prints a
 * single warning. Out-of-range indices are ignored and counted in
 * isoharness_shim_dropped().
 */

#ifndef ISOHARNESS_SHIM_H_
#define ISOHARNESS_SHIM_H_

#include <stdint.h>
#include <stdio.h>

#include "isoharness/target_abi.h"

#if defined(__GNUC__)
#define ISOH_EXPORT __attribute__((visibility("default")))
#else
#define ISOH_EXPORT
#endif

static uint64_t* isoh_shim_counters_ = 0;
static uint32_t isoh_shim_count_ = 0;
static uint64_t isoh_shim_dropped_ = 0;
static int isoh_shim_warned_ = 0;

#ifdef __cplusplus
extern "C" {
#endif

ISOH_EXPORT void isoharness_shim_attach(uint64_t* counters, uint32_t count) {
  isoh_shim_counters_ = counters;
  isoh_shim_count_ = counters ? count : 0;
}

ISOH_EXPORT uint64_t isoharness_shim_dropped(void) {
  return isoh_shim_dropped_;
}

#ifdef __cplusplus
} /* extern "C" */
#endif

static inline void edge_hit(uint32_t i) {
  if (!isoh_shim_counters_) {
    if (!isoh_shim_warned_) {
      isoh_shim_warned_ = 1;
      fprintf(stderr, "isoharness shim: edge_hit before attach, ignoring\n");
    }
    return;
  }
  if (i >= isoh_shim_count_) {
    ++isoh_shim_dropped_;
    return;
  }
  ++isoh_shim_counters_[i];
}

#endif /* ISOHARNESS_SHIM_H_ */

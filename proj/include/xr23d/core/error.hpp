/*
 * xr23d: biplanar X-ray to 3D bone reconstruction benchmark toolkit
 *
 * Copyright 2026 The xr23d Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xr23d {

/// Base of every error raised by the toolkit. `kind()` is the stable,
/// machine-readable name used in structured CLI errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual std::string_view kind() const noexcept { return "Error"; }
};

#define XR23D_DEFINE_ERROR(Name)                                          \
  class Name : public Error {                                             \
   public:                                                                \
    using Error::Error;                                                   \
    std::string_view kind() const noexcept override { return #Name; }     \
  }

XR23D_DEFINE_ERROR(FormatError);
XR23D_DEFINE_ERROR(UnsupportedError);
XR23D_DEFINE_ERROR(GeometryError);
XR23D_DEFINE_ERROR(ShapeError);
XR23D_DEFINE_ERROR(DegenerateError);
XR23D_DEFINE_ERROR(PreparationError);
XR23D_DEFINE_ERROR(PartitionError);
XR23D_DEFINE_ERROR(PlaneError);
XR23D_DEFINE_ERROR(ConsistencyError);
XR23D_DEFINE_ERROR(RankingError);
XR23D_DEFINE_ERROR(EmptyRunError);
XR23D_DEFINE_ERROR(ConfigError);
XR23D_DEFINE_ERROR(IoError);

#undef XR23D_DEFINE_ERROR

}  // namespace xr23d

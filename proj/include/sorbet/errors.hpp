// Copyright 2026 The Sorbet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SORBET__ERRORS_HPP_
#define SORBET__ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace sorbet
{

/// Base of every error this library throws. Malformed input must surface as
/// one of these, never as an abort or an untyped exception.
class Error : public std::runtime_error
{
public:
  explicit Error(const std::string & what) : std::runtime_error(what) {}
  virtual const char * type_name() const { return "Error"; }
};

#define SORBET_DEFINE_ERROR(NAME)                                 \
  class NAME : public Error                                       \
  {                                                               \
  public:                                                         \
    using Error::Error;                                           \
    const char * type_name() const override { return #NAME; }     \
  }

SORBET_DEFINE_ERROR(IoError);
SORBET_DEFINE_ERROR(FormatError);
SORBET_DEFINE_ERROR(ValidationError);
SORBET_DEFINE_ERROR(SingularTransform);
SORBET_DEFINE_ERROR(EmptyInput);
SORBET_DEFINE_ERROR(PatternOutOfRange);
SORBET_DEFINE_ERROR(InsufficientHistory);
SORBET_DEFINE_ERROR(LengthMismatch);
SORBET_DEFINE_ERROR(SchemaError);
SORBET_DEFINE_ERROR(FrameMismatch);

#undef SORBET_DEFINE_ERROR

/// "IoError", "FormatError", ... for sorbet errors; "Exception" otherwise.
inline const char * error_type_name(const std::exception & e)
{
  if (const auto * err = dynamic_cast<const Error *>(&e)) {
    return err->type_name();
  }
  return "Exception";
}

}  // namespace sorbet

#endif  // SORBET__ERRORS_HPP_

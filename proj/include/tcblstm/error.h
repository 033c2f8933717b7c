// include/tcblstm/error.h

// Copyright 2026   The tcblstm Authors

// See ../../COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef TCBLSTM_ERROR_H_
#define TCBLSTM_ERROR_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tcblstm {

// Every failure raised by the library derives from Error. The CLI maps
// UserError subclasses to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UserError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public UserError {
 public:
  using UserError::UserError;
};

class ParameterError : public UserError {
 public:
  using UserError::UserError;
};

class LabelError : public UserError {
 public:
  using UserError::UserError;
};

class ConfigError : public UserError {
 public:
  using UserError::UserError;
};

class InputError : public UserError {
 public:
  using UserError::UserError;
};

class UsageError : public UserError {
 public:
  using UserError::UserError;
};

class FormatError : public UserError {
 public:
  using UserError::UserError;
};

class CorruptionError : public UserError {
 public:
  CorruptionError(const std::string &what, std::uint64_t offset)
      : UserError(what + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Raised by the finite-difference oracle; never a user mistake.
class OracleError : public Error {
 public:
  using Error::Error;
};

}  // namespace tcblstm

#endif  // TCBLSTM_ERROR_H_

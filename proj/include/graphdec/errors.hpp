// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace graphdec {

// Base for every error the library raises. Candidate failures (a model output
// that does not compile, a test that fails) are data and never use these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or incomplete ingestion bundle.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

class UnknownRuleSetVersion : public Error {
 public:
  using Error::Error;
};

// The token budget cannot hold the parts of the prompt that are never
// truncated.
class BudgetImpossible : public Error {
 public:
  using Error::Error;
};

class AuthError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class NoCodeFound : public Error {
 public:
  using Error::Error;
};

// The compiler/linker/emulator binary named by a toolchain template could not
// be found. Distinct from a candidate that fails to compile.
class ToolchainUnavailable : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace graphdec

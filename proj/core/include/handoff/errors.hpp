/* Copyright 2026 The Handoff Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace handoff {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration values or references (bad tag set, unknown backend).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Structured input could not be parsed; `field` names the offending key.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Argument outside a function's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Illegal event for the current handoff phase. Indicates a coordinator bug
// or a scripted backend that does not follow the protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// A prefill that does not extend the committed context.
class ContextDivergenceError : public Error {
 public:
  using Error::Error;
};

// Transport or server failure. `partial_text` carries any streamed output
// received before the failure.
class BackendError : public Error {
 public:
  BackendError(const std::string& message, bool retriable,
               std::string partial_text = {})
      : Error(message),
        retriable_(retriable),
        partial_text_(std::move(partial_text)) {}
  bool retriable() const noexcept { return retriable_; }
  const std::string& partial_text() const noexcept { return partial_text_; }

 private:
  bool retriable_;
  std::string partial_text_;
};

// Backend does not implement an optional operation (e.g. greedy probes).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Annotator response did not follow the declared snippet delimiters.
class AnnotationFormatError : public Error {
 public:
  AnnotationFormatError(const std::string& message, std::string raw_response)
      : Error(message), raw_response_(std::move(raw_response)) {}
  const std::string& raw_response() const noexcept { return raw_response_; }

 private:
  std::string raw_response_;
};

}  // namespace handoff

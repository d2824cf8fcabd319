/*
 * Copyright 2026 The likertqc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
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

namespace likertqc {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: a record, a file row, a config value.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Failure talking to a remote endpoint.
class TransportError : public Error {
public:
    using Error::Error;
};

/// The endpoint rejected our credentials; collection cannot continue.
class AuthError : public TransportError {
public:
    using TransportError::TransportError;
};

}  // namespace likertqc

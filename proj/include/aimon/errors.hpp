// Copyright 2026 The Aimon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace aimon {

// Base for every error this library raises on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A line record that does not conform to the documented schema.
class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t position, const std::string& reason)
        : Error("malformed record at position " + std::to_string(position) + ": " + reason),
          position(position),
          reason(reason) {}
    std::size_t position;
    std::string reason;
};

// A well-formed record whose values break a domain type invariant.
class InvariantViolation : public Error {
public:
    explicit InvariantViolation(const std::string& reason)
        : Error("invariant violation: " + reason) {}
};

// Transaction timestamp precedes the state's high-water mark beyond tolerance.
class ClockRegression : public Error {
public:
    ClockRegression(std::int64_t txn_ts, std::int64_t high_water)
        : Error("clock regression: txn at " + std::to_string(txn_ts) +
                " precedes high-water mark " + std::to_string(high_water)) {}
};

class UnknownTenant : public Error {
public:
    explicit UnknownTenant(const std::string& tenant)
        : Error("unknown tenant: " + tenant) {}
};

class UnknownInput : public Error {
public:
    explicit UnknownInput(const std::string& input_id)
        : Error("unknown input: " + input_id) {}
};

// Raised by payload-derived accessors when the monitoring level withholds the data.
class UnavailableAtMonitoringLevel : public Error {
public:
    explicit UnavailableAtMonitoringLevel(const std::string& what_data)
        : Error(what_data + " unavailable at the configured monitoring level") {}
};

class InsufficientHistory : public Error {
public:
    explicit InsufficientHistory(std::size_t min_required)
        : Error("insufficient profile history, need " + std::to_string(min_required) +
                " closed windows"),
          min_required(min_required) {}
    std::size_t min_required;
};

class InsufficientPeers : public Error {
public:
    explicit InsufficientPeers(std::size_t min_required)
        : Error("insufficient peers, need " + std::to_string(min_required)),
          min_required(min_required) {}
    std::size_t min_required;
};

class InvalidScenarioParams : public Error {
public:
    InvalidScenarioParams(const std::string& name, const std::string& reason)
        : Error("invalid scenario param '" + name + "': " + reason),
          name(name),
          reason(reason) {}
    std::string name;
    std::string reason;
};

class UnorderedInput : public Error {
public:
    explicit UnorderedInput(const std::string& reason)
        : Error("unordered input stream: " + reason) {}
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& path, const std::string& reason)
        : Error("config error in " + path + ": " + reason), path(path), reason(reason) {}
    std::string path;
    std::string reason;
};

}  // namespace aimon

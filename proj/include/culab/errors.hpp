#pragma once

#include <stdexcept>
#include <string>

namespace culab {

/// Bad configuration value or unusable argument combination.
/// CLI maps this family to exit code 1.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Structural problem in an on-disk record file. Carries the offending
/// field path so the message names what is missing or malformed.
class schema_error : public config_error {
public:
    schema_error(const std::string& field_path, const std::string& what)
        : config_error("schema error at '" + field_path + "': " + what),
          field_path_(field_path) {}

    const std::string& field_path() const { return field_path_; }

private:
    std::string field_path_;
};

/// Name or id that does not resolve (unknown entity, token, method, ...).
class lookup_error : public config_error {
public:
    explicit lookup_error(const std::string& what) : config_error(what) {}
};

/// Numerical failure at runtime: divergence, non-finite loss, overflow.
/// CLI maps this to exit code 2.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

/// File could not be read, written, or parsed at the byte level.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace culab

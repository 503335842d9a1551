#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace lampe {

/// Base error carrying a stable machine-readable code alongside the message.
/// Codes are part of the CLI contract (emitted in structured stderr JSON).
class error : public std::runtime_error {
public:
    error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class invalid_config : public error {
public:
    explicit invalid_config(const std::string& what) : error("invalid_config", what) {}
};

/// Out-of-range indices or violated call preconditions.
class precondition_error : public error {
public:
    explicit precondition_error(const std::string& what) : error("precondition", what) {}
};

class domain_error : public error {
public:
    explicit domain_error(const std::string& what) : error("domain_error", what) {}
};

class insufficient_data : public error {
public:
    explicit insufficient_data(const std::string& what) : error("insufficient_data", what) {}
};

class rank_error : public error {
public:
    explicit rank_error(const std::string& what) : error("rank_error", what) {}
};

class io_error : public error {
public:
    explicit io_error(const std::string& what) : error("io_error", what) {}
};

class parse_error : public error {
public:
    explicit parse_error(const std::string& what) : error("parse_error", what) {}
};

}  // namespace lampe

#pragma once

#include <stdexcept>
#include <string>

namespace semkge {

// Bad inputs: malformed files, invalid configs, misused APIs.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Parse failure with file/line context.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& msg)
        : ValidationError(file + ":" + std::to_string(line) + ": " + msg),
          file_(file), line_(line) {}

    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

// Failures during a run (divergence, I/O breakage). Exit code 2.
class RuntimeFailure : public std::runtime_error {
public:
    explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace semkge

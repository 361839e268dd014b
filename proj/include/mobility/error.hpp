#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace mobility {

/// Base class of every error raised by the toolkit.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data; the message carries file and line when known.
class InputError : public ModelError {
public:
    InputError(const std::string& file, std::size_t line, const std::string& what)
        : ModelError(format(file, line, what)), file_(file), line_(line) {}

    explicit InputError(const std::string& what) : ModelError(what) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    static std::string format(const std::string& file, std::size_t line, const std::string& what) {
        std::string out = file;
        if (line > 0) out += ":" + std::to_string(line);
        return out + ": " + what;
    }

    std::string file_;
    std::size_t line_ = 0;
};

/// An iterative solver ran out of iterations.
class ConvergenceError : public ModelError {
public:
    ConvergenceError(const std::string& what, double residual)
        : ModelError(what + " (last residual " + short_number(residual) + ")"), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    static std::string short_number(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        return buf;
    }

    double residual_;
};

}  // namespace mobility

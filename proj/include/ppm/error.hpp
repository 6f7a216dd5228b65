#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ppm {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: geometry, scenario file, CLI arguments.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical failure at a material point (lost positive definiteness,
/// inverted deformation, non-finite state).
class NumericalError : public Error {
public:
    static constexpr std::size_t kNoPoint = static_cast<std::size_t>(-1);

    NumericalError(const std::string& what, std::size_t point = kNoPoint, long step = -1)
        : Error(decorate(what, point, step)), point_(point), step_(step) {}

    std::size_t point() const { return point_; }
    long step() const { return step_; }

    /// Re-raise with the step index attached.
    NumericalError at_step(long step) const { return NumericalError(raw(), point_, step); }

private:
    static std::string decorate(const std::string& what, std::size_t point, long step) {
        std::string msg = what;
        if (point != kNoPoint) msg += " [point " + std::to_string(point) + "]";
        if (step >= 0) msg += " [step " + std::to_string(step) + "]";
        return msg;
    }
    std::string raw() const {
        std::string msg = this->what();
        const auto cut = msg.find(" [");
        return cut == std::string::npos ? msg : msg.substr(0, cut);
    }

    std::size_t point_;
    long step_;
};

}  // namespace ppm

#pragma once

#include <stdexcept>
#include <string>

namespace plemc {

// Model cannot produce a usable prediction (e.g. no simulated scan survives
// the acceptance filter anywhere in a grid cell).
class DegenerateModelError : public std::runtime_error {
public:
    explicit DegenerateModelError(const std::string& what) : std::runtime_error(what) {}
};

// Histogram binning cannot satisfy the minimum-expected-count rule.
class BinningError : public std::runtime_error {
public:
    explicit BinningError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, long line = -1)
        : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

} // namespace plemc

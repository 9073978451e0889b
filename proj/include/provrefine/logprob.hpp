#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace provrefine {

// Log-space probability with an explicit sentinel for log 0.
class LogProb {
public:
    LogProb() = default;  // probability 1
    static LogProb one() { return {}; }
    static LogProb zero() {
        LogProb l;
        l.zero_ = true;
        return l;
    }
    static LogProb from_log(double v) {
        if (std::isnan(v)) throw std::domain_error("LogProb from NaN");
        if (v == -std::numeric_limits<double>::infinity()) return zero();
        LogProb l;
        l.v_ = v;
        return l;
    }
    static LogProb from_prob(double p) {
        if (!(p >= 0.0)) throw std::domain_error("negative or NaN probability");
        return p == 0.0 ? zero() : from_log(std::log(p));
    }

    bool is_zero() const { return zero_; }
    // log value; -inf as a double for the zero sentinel
    double log() const { return zero_ ? -std::numeric_limits<double>::infinity() : v_; }
    double prob() const { return zero_ ? 0.0 : std::exp(v_); }

    // product of probabilities
    friend LogProb operator*(LogProb a, LogProb b) {
        if (a.zero_ || b.zero_) return zero();
        return from_log(a.v_ + b.v_);
    }
    LogProb& operator*=(LogProb b) { return *this = *this * b; }
    // sum of probabilities
    friend LogProb operator+(LogProb a, LogProb b) {
        if (a.zero_) return b;
        if (b.zero_) return a;
        double hi = a.v_ > b.v_ ? a.v_ : b.v_, lo = a.v_ > b.v_ ? b.v_ : a.v_;
        return from_log(hi + std::log1p(std::exp(lo - hi)));
    }

    friend bool operator<(LogProb a, LogProb b) {
        if (a.zero_) return !b.zero_;
        if (b.zero_) return false;
        return a.v_ < b.v_;
    }
    friend bool operator>(LogProb a, LogProb b) { return b < a; }
    friend bool operator<=(LogProb a, LogProb b) { return !(b < a); }
    friend bool operator>=(LogProb a, LogProb b) { return !(a < b); }
    friend bool operator==(LogProb a, LogProb b) { return a.zero_ == b.zero_ && (a.zero_ || a.v_ == b.v_); }

    std::string str() const;

private:
    double v_ = 0.0;
    bool zero_ = false;
};

}  // namespace provrefine

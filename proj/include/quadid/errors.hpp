#pragma once

#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace quadid {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class SingularResolventError : public Error {
public:
    explicit SingularResolventError(std::complex<double> s)
        : Error(describe(s)), s_(s) {}
    std::complex<double> point() const { return s_; }

private:
    static std::string describe(std::complex<double> s) {
        std::ostringstream os;
        os.precision(17);
        os << "singular resolvent at s = " << s.real() << (s.imag() < 0 ? "-" : "+")
           << std::abs(s.imag()) << "j";
        return os.str();
    }
    std::complex<double> s_;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, double t) : Error(what), t_(t) {}
    double time() const { return t_; }

private:
    double t_;
};

class SteadyStateError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<std::vector<double>> histories)
        : Error(what), histories_(std::move(histories)) {}
    const std::vector<std::vector<double>>& histories() const { return histories_; }

private:
    std::vector<std::vector<double>> histories_;
};

class IllConditionedError : public Error {
public:
    using Error::Error;
};

class BinCollisionError : public Error {
public:
    using Error::Error;
};

}  // namespace quadid

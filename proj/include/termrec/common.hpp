#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace termrec {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define TERMREC_ERROR(name)                                              \
    struct name : Error {                                                \
        explicit name(const std::string& msg = #name) : Error(msg) {}    \
    }

TERMREC_ERROR(BadMagic);
TERMREC_ERROR(TruncatedHeader);
TERMREC_ERROR(TruncatedRecord);
TERMREC_ERROR(MalformedPacket);
TERMREC_ERROR(InvalidParams);
TERMREC_ERROR(EmptyInput);
TERMREC_ERROR(DimensionMismatch);
TERMREC_ERROR(BadShape);
TERMREC_ERROR(NonFinite);
TERMREC_ERROR(TooFewRows);
TERMREC_ERROR(DegenerateComponent);
TERMREC_ERROR(AlignmentError);
TERMREC_ERROR(IndexOutOfRange);
TERMREC_ERROR(SingleClass);
TERMREC_ERROR(UnknownKind);
TERMREC_ERROR(LengthMismatch);
TERMREC_ERROR(BadProfile);
TERMREC_ERROR(IoError);
TERMREC_ERROR(ConfigError);
TERMREC_ERROR(VersionMismatch);
TERMREC_ERROR(MissingLabel);

#undef TERMREC_ERROR

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(size_t rows, size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    double& at(size_t r, size_t c) { return data_[r * cols_ + c]; }
    double at(size_t r, size_t c) const { return data_[r * cols_ + c]; }
    double* row(size_t r) { return data_.data() + r * cols_; }
    const double* row(size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void append_row(const double* vals, size_t n) {
        if (cols_ == 0) cols_ = n;
        if (n != cols_) throw DimensionMismatch("append_row: column mismatch");
        data_.insert(data_.end(), vals, vals + n);
        ++rows_;
    }
    void append_row(const std::vector<double>& vals) {
        append_row(vals.data(), vals.size());
    }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    size_t rows_ = 0;
    size_t cols_ = 0;
    std::vector<double> data_;
};

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double squared_distance(const double* a, const double* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace termrec

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hitskt {

// Dense row-major tensor of doubles with a gradient buffer of the same shape.
// Rank 1 and 2 cover everything the model needs; training math runs in 64-bit,
// and quantize_f32() provides the reduced-precision storage mode used by
// inference (values rounded through IEEE float, accumulation stays double).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<long> shape);
    Tensor(long rows, long cols);
    explicit Tensor(long n);

    static Tensor zeros(long n) { return Tensor(n); }
    static Tensor zeros(long rows, long cols) { return Tensor(rows, cols); }

    int rank() const { return static_cast<int>(shape_.size()); }
    long dim(int i) const { return shape_.at(i); }
    long size() const { return static_cast<long>(val_.size()); }
    const std::vector<long>& shape() const { return shape_; }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    double* data() { return val_.data(); }
    const double* data() const { return val_.data(); }
    double* grad() { return grad_.data(); }
    const double* grad() const { return grad_.data(); }

    // 1-D / 2-D element access (values and gradients).
    double& at(long i) { return val_[i]; }
    double at(long i) const { return val_[i]; }
    double& at(long r, long c) { return val_[r * cols_ + c]; }
    double at(long r, long c) const { return val_[r * cols_ + c]; }
    double& gat(long i) { return grad_[i]; }
    double gat(long i) const { return grad_[i]; }
    double& gat(long r, long c) { return grad_[r * cols_ + c]; }
    double gat(long r, long c) const { return grad_[r * cols_ + c]; }

    long row_stride() const { return cols_; }

    void fill(double v);
    void zero_grad();
    // True when every value and gradient entry is finite.
    bool finite() const;
    // Round every value through 32-bit float (inference precision mode).
    void quantize_f32();

private:
    std::vector<long> shape_;
    long cols_ = 0;  // stride of the leading dimension for rank-2 access
    std::vector<double> val_;
    std::vector<double> grad_;
};

// Debug-build guard: aborts with the tensor name if values or grads went
// non-finite. Compiled out under NDEBUG.
void debug_check_finite(const Tensor& t, const char* what);

}  // namespace hitskt

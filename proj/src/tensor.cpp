#include "hitskt/tensor.hpp"

#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace hitskt {

static long shape_size(const std::vector<long>& shape) {
    long n = 1;
    for (long d : shape) {
        if (d < 0) throw std::invalid_argument("tensor dim must be non-negative");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<long> shape) : shape_(std::move(shape)) {
    long n = shape_size(shape_);
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
    val_.assign(n, 0.0);
    grad_.assign(n, 0.0);
}

Tensor::Tensor(long rows, long cols) : Tensor(std::vector<long>{rows, cols}) {}

Tensor::Tensor(long n) : Tensor(std::vector<long>{n}) {}

void Tensor::fill(double v) {
    for (double& x : val_) x = v;
}

void Tensor::zero_grad() {
    for (double& g : grad_) g = 0.0;
}

bool Tensor::finite() const {
    for (double x : val_)
        if (!std::isfinite(x)) return false;
    for (double g : grad_)
        if (!std::isfinite(g)) return false;
    return true;
}

void Tensor::quantize_f32() {
    for (double& x : val_) x = static_cast<double>(static_cast<float>(x));
}

void debug_check_finite(const Tensor& t, const char* what) {
#ifndef NDEBUG
    if (!t.finite()) {
        std::fprintf(stderr, "non-finite tensor: %s\n", what);
        std::abort();
    }
#else
    (void)t;
    (void)what;
#endif
}

}  // namespace hitskt

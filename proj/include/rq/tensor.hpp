#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rq {

/// Flat real-valued array with shape metadata. Row-major.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
        : shape(std::move(shape_)), data(std::move(data_)) {
        if (numel_of(shape) != data.size())
            throw std::invalid_argument("Tensor: shape/data length mismatch");
    }

    static Tensor from_vector(std::vector<double> v) {
        std::vector<std::size_t> s{v.size()};
        return Tensor(std::move(s), std::move(v));
    }

    static Tensor zeros(std::vector<std::size_t> shape_) {
        std::size_t n = numel_of(shape_);
        return Tensor(std::move(shape_), std::vector<double>(n, 0.0));
    }

    std::size_t numel() const { return data.size(); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // 2-D access, row-major
    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    void check_finite(const std::string& who) const {
        for (std::size_t i = 0; i < data.size(); ++i)
            if (!std::isfinite(data[i]))
                throw std::invalid_argument(who + ": non-finite element at index " +
                                            std::to_string(i));
    }

  private:
    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }
};

}  // namespace rq

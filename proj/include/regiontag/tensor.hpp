#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace regiontag {

template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shape_, T fill = T(0)) : shape(std::move(shape_)) {
        data.assign(count(shape), fill);
    }

    static std::size_t count(const std::vector<int>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1},
                               [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
    }
    std::size_t size() const { return data.size(); }
    bool operator==(const Tensor&) const = default;
};

/// Ordered name -> tensor map. Order is fixed at construction and defines
/// serialization and reduction order.
template <typename T>
class NamedTensors {
public:
    void add(std::string name, Tensor<T> t) { entries_.emplace_back(std::move(name), std::move(t)); }

    Tensor<T>& at(const std::string& name);
    const Tensor<T>& at(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::size_t size() const { return entries_.size(); }
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    std::pair<std::string, Tensor<T>>& operator[](std::size_t i) { return entries_[i]; }
    const std::pair<std::string, Tensor<T>>& operator[](std::size_t i) const { return entries_[i]; }

    /// Same names and shapes, all zeros.
    NamedTensors zeros_like() const {
        NamedTensors out;
        for (const auto& [name, t] : entries_) out.add(name, Tensor<T>(t.shape));
        return out;
    }
    void fill(T v) {
        for (auto& [name, t] : entries_) std::fill(t.data.begin(), t.data.end(), v);
    }
    /// this += scale * other (matching layout).
    void axpy(T scale, const NamedTensors& other) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            auto& dst = entries_[i].second.data;
            const auto& src = other.entries_[i].second.data;
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
        }
    }
    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& [name, t] : entries_) n += t.size();
        return n;
    }
    bool operator==(const NamedTensors&) const = default;

private:
    std::vector<std::pair<std::string, Tensor<T>>> entries_;
};

}  // namespace regiontag

#include "regiontag/error.hpp"

namespace regiontag {

template <typename T>
Tensor<T>& NamedTensors<T>::at(const std::string& name) {
    for (auto& [n, t] : entries_) {
        if (n == name) return t;
    }
    internal_error("no tensor named '" + name + "'");
}

template <typename T>
const Tensor<T>& NamedTensors<T>::at(const std::string& name) const {
    for (const auto& [n, t] : entries_) {
        if (n == name) return t;
    }
    internal_error("no tensor named '" + name + "'");
}

template <typename T>
bool NamedTensors<T>::contains(const std::string& name) const {
    for (const auto& [n, t] : entries_) {
        if (n == name) return true;
    }
    return false;
}

}  // namespace regiontag

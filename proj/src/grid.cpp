#include "nudge/grid.hpp"

#include "nudge/errors.hpp"

#include <cmath>
#include <string>

namespace nudge {

namespace {
constexpr double kGridTol = 1e-9;
}

PositionGrid::PositionGrid() : PositionGrid(uniform(11)) {}

PositionGrid::PositionGrid(std::vector<double> fractions) : fractions_(std::move(fractions)) {
    if (fractions_.size() < 2) {
        throw ValidationError("position_grid: needs at least two fractions");
    }
    if (std::abs(fractions_.front()) > kGridTol || std::abs(fractions_.back() - 1.0) > kGridTol) {
        throw ValidationError("position_grid: must span [0, 1]");
    }
    for (std::size_t i = 1; i < fractions_.size(); ++i) {
        if (!(fractions_[i] > fractions_[i - 1])) {
            throw ValidationError("position_grid: must be strictly increasing (index " +
                                  std::to_string(i) + ")");
        }
    }
    fractions_.front() = 0.0;
    fractions_.back() = 1.0;
}

PositionGrid PositionGrid::uniform(std::size_t size) {
    if (size < 2) {
        throw ValidationError("position_grid: needs at least two fractions");
    }
    std::vector<double> f(size);
    const auto steps = static_cast<double>(size - 1);
    for (std::size_t i = 0; i < size; ++i) {
        f[i] = static_cast<double>(i) / steps;
    }
    return PositionGrid(std::move(f));
}

double PositionGrid::fraction(std::size_t index) const {
    if (index >= fractions_.size()) {
        throw IndexError("grid index " + std::to_string(index) + " out of range");
    }
    return fractions_[index];
}

std::optional<std::size_t> PositionGrid::index_of(double fraction) const {
    const std::size_t i = nearest_index(fraction);
    if (std::abs(fractions_[i] - fraction) <= kGridTol) {
        return i;
    }
    return std::nullopt;
}

std::size_t PositionGrid::nearest_index(double fraction) const {
    std::size_t best = 0;
    double best_gap = std::abs(fractions_[0] - fraction);
    for (std::size_t i = 1; i < fractions_.size(); ++i) {
        const double gap = std::abs(fractions_[i] - fraction);
        if (gap < best_gap) {
            best = i;
            best_gap = gap;
        }
    }
    return best;
}

} // namespace nudge

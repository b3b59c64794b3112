#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace nudge {

// Ordered set of admissible position fractions (stock value / total assets).
class PositionGrid {
public:
    // Default: {0.0, 0.1, ..., 1.0}.
    PositionGrid();
    // Throws ValidationError unless strictly increasing, starting at 0 and ending at 1.
    explicit PositionGrid(std::vector<double> fractions);

    static PositionGrid uniform(std::size_t size);

    [[nodiscard]] std::size_t size() const noexcept { return fractions_.size(); }
    [[nodiscard]] double fraction(std::size_t index) const;
    [[nodiscard]] std::span<const double> fractions() const noexcept { return fractions_; }

    // Exact membership (within 1e-9); nullopt when off-grid.
    [[nodiscard]] std::optional<std::size_t> index_of(double fraction) const;
    [[nodiscard]] std::size_t nearest_index(double fraction) const;
    [[nodiscard]] std::size_t last_index() const noexcept { return fractions_.size() - 1; }

    bool operator==(const PositionGrid&) const = default;

private:
    std::vector<double> fractions_;
};

// A decision d: the post-order position as a grid element.
struct PositionTarget {
    std::size_t index{0};
    double fraction{0.0};

    static PositionTarget at(const PositionGrid& grid, std::size_t index) {
        return {index, grid.fraction(index)};
    }
    bool operator==(const PositionTarget&) const = default;
};

} // namespace nudge

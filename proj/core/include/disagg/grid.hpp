#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace disagg {

enum class Variable { LAI, LST, PPT, SM, LC, COORD };

std::string_view to_string(Variable v) noexcept;
Variable parse_variable(std::string_view tag);

/// Land-cover class ids stored in LC grids.
enum class LandCover : int { Bare = 0, Corn = 1, Cotton = 2 };
inline constexpr int kLandCoverCount = 3;

std::string_view to_string(LandCover lc) noexcept;

/// A single-variable raster at one resolution, row-major.
///
/// Invariants enforced on construction: rows*cols == values.size(),
/// cell_size > 0, finite SM values within [0,1], LC values integral class ids.
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, double cell_size, Variable var, double fill = 0.0);
    Grid(std::size_t rows, std::size_t cols, double cell_size, Variable var, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    double cell_size() const noexcept { return cell_size_; }
    Variable variable() const noexcept { return var_; }

    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool same_shape(const Grid& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    /// Re-checks the variable-specific invariants; throws DomainError on violation.
    void validate() const;

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    double cell_size_ = 1.0;
    Variable var_ = Variable::COORD;
    std::vector<double> values_;
};

enum class AggregateMode { Mean, Majority };

/// Block-coarsens by `factor`. Mean for numeric variables, modal class for LC
/// (ties to the smallest class id). Majority is selected automatically for LC
/// unless `mode` is given explicitly.
Grid aggregate(const Grid& fine, std::size_t factor);
Grid aggregate(const Grid& fine, std::size_t factor, AggregateMode mode);

/// Copies each coarse cell into its factor x factor block.
Grid replicate(const Grid& coarse, std::size_t factor);

/// Adds i.i.d. N(0, sd^2) noise; SM is clamped to [0,1] and PPT to >= 0 afterwards.
/// NaN cells stay NaN.
Grid add_noise(const Grid& g, double sd, std::uint64_t seed);

double mean(const Grid& g);

// ASCII grid files: header `rows cols cell_size tag`, then one line per row.
void write_grid(std::ostream& os, const Grid& g);
Grid read_grid(std::istream& is);
void save_grid(const std::filesystem::path& path, const Grid& g);
Grid load_grid(const std::filesystem::path& path);

}  // namespace disagg

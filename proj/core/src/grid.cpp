#include "disagg/grid.hpp"

#include "disagg/errors.hpp"
#include "disagg/rng.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace disagg {

namespace {

constexpr std::array<std::string_view, 6> kVariableTags = {"LAI", "LST", "PPT", "SM", "LC", "COORD"};

void check_shape(std::size_t rows, std::size_t cols, std::size_t n, double cell_size) {
    if (rows * cols != n) {
        throw DimensionError("grid: rows*cols (" + std::to_string(rows * cols) +
                             ") does not match value count (" + std::to_string(n) + ")");
    }
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
        throw DomainError("grid: cell_size must be positive and finite");
    }
}

}  // namespace

std::string_view to_string(Variable v) noexcept {
    return kVariableTags[static_cast<std::size_t>(v)];
}

Variable parse_variable(std::string_view tag) {
    for (std::size_t i = 0; i < kVariableTags.size(); ++i) {
        if (kVariableTags[i] == tag) return static_cast<Variable>(i);
    }
    throw DataError("unknown variable tag '" + std::string(tag) + "'");
}

std::string_view to_string(LandCover lc) noexcept {
    switch (lc) {
        case LandCover::Bare: return "bare";
        case LandCover::Corn: return "corn";
        case LandCover::Cotton: return "cotton";
    }
    return "?";
}

Grid::Grid(std::size_t rows, std::size_t cols, double cell_size, Variable var, double fill)
    : rows_(rows), cols_(cols), cell_size_(cell_size), var_(var), values_(rows * cols, fill) {
    check_shape(rows, cols, values_.size(), cell_size);
    validate();
}

Grid::Grid(std::size_t rows, std::size_t cols, double cell_size, Variable var, std::vector<double> values)
    : rows_(rows), cols_(cols), cell_size_(cell_size), var_(var), values_(std::move(values)) {
    check_shape(rows, cols, values_.size(), cell_size);
    validate();
}

void Grid::validate() const {
    if (var_ == Variable::SM) {
        for (double v : values_) {
            if (std::isfinite(v) && (v < 0.0 || v > 1.0)) {
                throw DomainError("grid: SM value outside [0,1]: " + std::to_string(v));
            }
        }
    } else if (var_ == Variable::LC) {
        for (double v : values_) {
            if (std::isnan(v)) continue;
            if (v != std::floor(v) || v < 0.0 || v >= kLandCoverCount) {
                throw DomainError("grid: LC value is not a declared class id: " + std::to_string(v));
            }
        }
    }
}

Grid aggregate(const Grid& fine, std::size_t factor) {
    return aggregate(fine, factor, fine.variable() == Variable::LC ? AggregateMode::Majority : AggregateMode::Mean);
}

Grid aggregate(const Grid& fine, std::size_t factor, AggregateMode mode) {
    if (fine.empty()) throw DomainError("aggregate: empty grid");
    if (factor == 0) throw DomainError("aggregate: factor must be positive");
    if (fine.rows() % factor != 0 || fine.cols() % factor != 0) {
        throw DimensionError("aggregate: factor " + std::to_string(factor) + " does not divide " +
                             std::to_string(fine.rows()) + "x" + std::to_string(fine.cols()));
    }
    const std::size_t cr = fine.rows() / factor;
    const std::size_t cc = fine.cols() / factor;
    Grid coarse(cr, cc, fine.cell_size() * static_cast<double>(factor), fine.variable());
    const double inv = 1.0 / static_cast<double>(factor * factor);

    for (std::size_t r = 0; r < cr; ++r) {
        for (std::size_t c = 0; c < cc; ++c) {
            if (mode == AggregateMode::Mean) {
                // shifted by the first cell so constant blocks come back exactly
                const double ref = fine(r * factor, c * factor);
                double sum = 0.0;
                for (std::size_t i = 0; i < factor; ++i)
                    for (std::size_t j = 0; j < factor; ++j) sum += fine(r * factor + i, c * factor + j) - ref;
                coarse(r, c) = ref + sum * inv;
            } else {
                std::array<std::size_t, kLandCoverCount> votes{};
                for (std::size_t i = 0; i < factor; ++i)
                    for (std::size_t j = 0; j < factor; ++j) {
                        const double v = fine(r * factor + i, c * factor + j);
                        const auto k = static_cast<std::size_t>(v);
                        if (v < 0 || k >= votes.size()) throw DomainError("aggregate: majority mode needs class ids");
                        ++votes[k];
                    }
                // max_element returns the first maximum, i.e. the smallest class id on ties.
                coarse(r, c) = static_cast<double>(std::max_element(votes.begin(), votes.end()) - votes.begin());
            }
        }
    }
    return coarse;
}

Grid replicate(const Grid& coarse, std::size_t factor) {
    if (factor == 0) throw DomainError("replicate: factor must be >= 1");
    Grid fine(coarse.rows() * factor, coarse.cols() * factor, coarse.cell_size() / static_cast<double>(factor),
              coarse.variable());
    for (std::size_t r = 0; r < fine.rows(); ++r)
        for (std::size_t c = 0; c < fine.cols(); ++c) fine(r, c) = coarse(r / factor, c / factor);
    return fine;
}

Grid add_noise(const Grid& g, double sd, std::uint64_t seed) {
    if (!(sd >= 0.0)) throw DomainError("add_noise: sd must be non-negative");
    Grid out = g;
    if (sd == 0.0) return out;
    Rng rng = make_rng(seed, {stream::kNoise});
    std::normal_distribution<double> noise(0.0, sd);
    for (double& v : out.values()) {
        const double e = noise(rng);  // drawn for every cell so the stream is layout-stable
        if (std::isnan(v)) continue;
        v += e;
        if (g.variable() == Variable::SM) v = std::clamp(v, 0.0, 1.0);
        if (g.variable() == Variable::PPT) v = std::max(v, 0.0);
    }
    return out;
}

double mean(const Grid& g) {
    if (g.empty()) throw DomainError("mean: empty grid");
    double s = 0.0;
    for (double v : g.values()) s += v;
    return s / static_cast<double>(g.size());
}

void write_grid(std::ostream& os, const Grid& g) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", g.cell_size());
    os << g.rows() << ' ' << g.cols() << ' ' << buf << ' ' << to_string(g.variable()) << '\n';
    for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) {
            if (c) os << ' ';
            const double v = g(r, c);
            if (std::isnan(v)) {
                os << "NaN";
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", v);
                os << buf;
            }
        }
        os << '\n';
    }
}

namespace {

double parse_number(std::string_view tok, std::size_t line) {
    if (tok == "NaN" || tok == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw DataError("grid line " + std::to_string(line) + ": bad number '" + std::string(tok) + "'");
    }
    return v;
}

}  // namespace

Grid read_grid(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw DataError("grid: missing header");
    std::istringstream hs(header);
    std::size_t rows = 0, cols = 0;
    std::string cell_tok, tag;
    if (!(hs >> rows >> cols >> cell_tok >> tag)) throw DataError("grid: malformed header '" + header + "'");
    const double cell = parse_number(cell_tok, 1);

    std::vector<double> values;
    values.reserve(rows * cols);
    std::string line;
    for (std::size_t r = 0; r < rows; ++r) {
        if (!std::getline(is, line)) throw DataError("grid: expected " + std::to_string(rows) + " rows");
        std::istringstream ls(line);
        std::string tok;
        std::size_t n = 0;
        while (ls >> tok) {
            values.push_back(parse_number(tok, r + 2));
            ++n;
        }
        if (n != cols) {
            throw DataError("grid line " + std::to_string(r + 2) + ": expected " + std::to_string(cols) +
                            " values, got " + std::to_string(n));
        }
    }
    return Grid(rows, cols, cell, parse_variable(tag), std::move(values));
}

void save_grid(const std::filesystem::path& path, const Grid& g) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path.string());
    write_grid(os, g);
}

Grid load_grid(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot read " + path.string());
    try {
        return read_grid(is);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace disagg

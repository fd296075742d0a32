#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stratify {

struct FrameSchema {
    std::vector<std::string> target_columns;
    std::vector<std::string> aux_columns;
    // Empty means every row belongs to the single domain "1".
    std::string domain_column;
    std::optional<std::string> id_column;

    // Throws InvalidSchema on an empty role list or a column listed twice.
    void validate() const;
};

enum class MissingPolicy { Strict, DropRow };

struct LoadOptions {
    char delimiter = ',';
    MissingPolicy missing = MissingPolicy::Strict;
    // Continuous auxiliary columns to cluster into k classes before use.
    std::map<std::string, int> discretize;
};

// Population frame. Categories are interned per auxiliary column; codes index
// into `categories[m]`, which is kept in natural sort order.
class Frame {
public:
    std::size_t rows() const noexcept { return ids_.size(); }
    std::size_t targets() const noexcept { return schema_.target_columns.size(); }
    std::size_t auxiliaries() const noexcept { return schema_.aux_columns.size(); }

    const FrameSchema& schema() const noexcept { return schema_; }

    const std::string& id(std::size_t row) const { return ids_[row]; }
    double y(std::size_t row, std::size_t g) const { return y_[row * targets() + g]; }
    std::span<const double> y_row(std::size_t row) const {
        return {y_.data() + row * targets(), targets()};
    }
    int x(std::size_t row, std::size_t m) const { return x_[row * auxiliaries() + m]; }
    std::span<const int> x_row(std::size_t row) const {
        return {x_.data() + row * auxiliaries(), auxiliaries()};
    }
    int domain_code(std::size_t row) const { return domain_[row]; }

    const std::vector<std::string>& categories(std::size_t m) const { return categories_[m]; }
    const std::vector<std::string>& domains() const noexcept { return domain_names_; }

    // Build a frame from already-typed columns. Category strings are interned
    // here. Used by the loader, the synthetic generator and tests.
    static Frame from_columns(FrameSchema schema, std::vector<std::string> ids,
                              std::vector<std::string> domains,
                              const std::vector<std::vector<double>>& targets,
                              const std::vector<std::vector<std::string>>& aux);

private:
    FrameSchema schema_;
    std::vector<std::string> ids_;
    std::vector<double> y_;
    std::vector<int> x_;
    std::vector<int> domain_;
    std::vector<std::vector<std::string>> categories_;
    std::vector<std::string> domain_names_;
};

struct DomainFrame {
    std::string domain;
    std::vector<std::size_t> rows;
};

Frame load_frame(std::istream& source, const FrameSchema& schema, const LoadOptions& options = {});
Frame load_frame_file(const std::string& path, const FrameSchema& schema,
                      const LoadOptions& options = {});

// Exact 1-D k-means via dynamic programming over the sorted distinct values.
// Returns labels 1..k ordered by cluster mean.
std::vector<int> discretize(std::span<const double> values, int k);

// Human-readable class names "[lo;hi](j)" for a discretized column.
std::vector<std::string> class_names(std::span<const double> values, std::span<const int> labels);

std::vector<DomainFrame> split_domains(const Frame& frame);

// Ordering used for category tuples and domain labels: numeric strings first
// (by value), then everything else lexicographically.
bool natural_less(const std::string& a, const std::string& b);

}  // namespace stratify

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mlm/labels.hpp"
#include "mlm/tensor.hpp"

namespace mlm {

/// Split of each latent code into `styles` consecutive blocks of `width` coordinates.
struct StyleLayout {
    Index styles = 1;
    Index width = 0;

    bool operator==(const StyleLayout&) const = default;
};

/**
 * Labeled latent codes: one column per (person, expression, rotation) cell.
 *
 * Construction validates the labels and requires a complete grid, so every
 * instance can be folded into an N x P x E x R tensor. Axis order is persons
 * sorted by id, expressions in vocabulary order (neutral first), left before right.
 */
class LatentDataset {
public:
    LatentDataset(Matrix codes, std::vector<CellLabel> manifest, std::optional<StyleLayout> styles = std::nullopt);

    const Matrix& codes() const { return codes_; }
    const std::vector<CellLabel>& manifest() const { return manifest_; }
    const std::optional<StyleLayout>& styles() const { return styles_; }
    const AxisLabels& axes() const { return axes_; }

    Index latent_dim() const { return codes_.rows(); }
    Index persons() const { return static_cast<Index>(axes_.persons.size()); }
    Index expressions() const { return static_cast<Index>(axes_.expressions.size()); }
    Index rotations() const { return static_cast<Index>(axes_.rotations.size()); }

    /// Column holding cell (p, e, r), indices into axes().
    Index column(Index p, Index e, Index r) const;
    std::optional<Index> find_column(const CellLabel& cell) const;
    Vector code(Index p, Index e, Index r) const { return codes_.col(column(p, e, r)); }

    /// Codes folded into an N x P x E x R tensor.
    DenseTensor to_tensor() const;

    /// Dataset restricted to the given person ids (order irrelevant).
    LatentDataset subset_persons(std::span<const std::string> ids) const;

    /// Coordinates [s*width, (s+1)*width) of every code, as a dataset without style layout.
    LatentDataset style_slice(Index s) const;

private:
    Matrix codes_;
    std::vector<CellLabel> manifest_;
    std::optional<StyleLayout> styles_;
    AxisLabels axes_;
    std::vector<Index> cell_to_column_;
};

// Persistence. A dataset is a pair of files: the binary code matrix at `path`
// and the text manifest at manifest_path(path).

std::filesystem::path manifest_path(const std::filesystem::path& codes_path);

void save_dataset(const LatentDataset& ds, const std::filesystem::path& codes_path);
LatentDataset load_dataset(const std::filesystem::path& codes_path);

/// Bare code matrix file (no manifest), e.g. latents produced by an external embedder.
void save_matrix(const Matrix& m, const std::filesystem::path& path);
Matrix load_matrix(const std::filesystem::path& path);

} // namespace mlm

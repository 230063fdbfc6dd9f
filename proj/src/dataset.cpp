#include "mlm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "binary_io.hpp"
#include "mlm/error.hpp"

namespace mlm {

namespace {

constexpr std::string_view kMatrixMagic = "MLMCODES";
constexpr std::uint32_t kMatrixVersion = 1;
constexpr std::string_view kManifestTag = "# latent-manifest";
constexpr int kManifestVersion = 1;
constexpr std::string_view kManifestHeader = "person,emotion,intensity,rotation";
constexpr std::size_t kMaxReportedCells = 20;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view s, const std::string& context) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw FormatError(context + ": cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

} // namespace

LatentDataset::LatentDataset(Matrix codes, std::vector<CellLabel> manifest, std::optional<StyleLayout> styles)
    : codes_(std::move(codes)), manifest_(std::move(manifest)), styles_(styles) {
    if (static_cast<Index>(manifest_.size()) != codes_.cols()) {
        throw DataError("manifest has " + std::to_string(manifest_.size()) + " entries for " +
                        std::to_string(codes_.cols()) + " code columns");
    }
    if (codes_.cols() == 0 || codes_.rows() == 0) throw DataError("dataset is empty");
    if (styles_ && (styles_->styles < 1 || styles_->width < 1 || styles_->styles * styles_->width != codes_.rows())) {
        throw DataError("style layout " + std::to_string(styles_->styles) + "x" + std::to_string(styles_->width) +
                        " does not match latent dimension " + std::to_string(codes_.rows()));
    }

    std::set<std::string> persons;
    std::set<ExpressionLabel> expressions;
    std::set<Rotation> rotations;
    for (const auto& c : manifest_) {
        if (c.person.empty() || c.person.find(',') != std::string::npos) {
            throw DataError("invalid person id '" + c.person + "'");
        }
        validate(c.expression);
        persons.insert(c.person);
        expressions.insert(c.expression);
        rotations.insert(c.rotation);
    }
    axes_.persons.assign(persons.begin(), persons.end());
    axes_.expressions.assign(expressions.begin(), expressions.end());
    axes_.rotations.assign(rotations.begin(), rotations.end());

    const Index np = this->persons(), ne = this->expressions(), nr = this->rotations();
    cell_to_column_.assign(static_cast<std::size_t>(np * ne * nr), -1);
    for (Index j = 0; j < codes_.cols(); ++j) {
        const auto& c = manifest_[static_cast<std::size_t>(j)];
        const Index p = static_cast<Index>(*axes_.person_index(c.person));
        const Index e = static_cast<Index>(*axes_.expression_index(c.expression));
        const Index r = static_cast<Index>(*axes_.rotation_index(c.rotation));
        Index& slot = cell_to_column_[static_cast<std::size_t>((p * ne + e) * nr + r)];
        if (slot >= 0) {
            throw DataError("label conflict: cell " + c.str() + " appears in columns " + std::to_string(slot) +
                            " and " + std::to_string(j));
        }
        slot = j;
    }

    std::vector<std::string> missing;
    std::size_t missing_count = 0;
    for (Index p = 0; p < np; ++p)
        for (Index e = 0; e < ne; ++e)
            for (Index r = 0; r < nr; ++r) {
                if (cell_to_column_[static_cast<std::size_t>((p * ne + e) * nr + r)] >= 0) continue;
                ++missing_count;
                if (missing.size() < kMaxReportedCells) {
                    missing.push_back(CellLabel{axes_.persons[static_cast<std::size_t>(p)],
                                                axes_.expressions[static_cast<std::size_t>(e)],
                                                axes_.rotations[static_cast<std::size_t>(r)]}
                                          .str());
                }
            }
    if (missing_count > 0) {
        std::string msg = "incomplete dataset: " + std::to_string(missing_count) + " missing cell(s):";
        for (const auto& m : missing) msg += " " + m;
        if (missing_count > missing.size()) msg += " ...";
        throw DataError(msg);
    }
}

Index LatentDataset::column(Index p, Index e, Index r) const {
    if (p < 0 || p >= persons() || e < 0 || e >= expressions() || r < 0 || r >= rotations()) {
        throw DimensionError("cell index out of range");
    }
    return cell_to_column_[static_cast<std::size_t>((p * expressions() + e) * rotations() + r)];
}

std::optional<Index> LatentDataset::find_column(const CellLabel& cell) const {
    const auto p = axes_.person_index(cell.person);
    const auto e = axes_.expression_index(cell.expression);
    const auto r = axes_.rotation_index(cell.rotation);
    if (!p || !e || !r) return std::nullopt;
    return column(static_cast<Index>(*p), static_cast<Index>(*e), static_cast<Index>(*r));
}

DenseTensor LatentDataset::to_tensor() const {
    const Index n = latent_dim(), np = persons(), ne = expressions(), nr = rotations();
    // Mode-1 unfolding has columns ordered (p, e, r) with r fastest.
    Matrix unfolded(n, np * ne * nr);
    for (Index p = 0; p < np; ++p)
        for (Index e = 0; e < ne; ++e)
            for (Index r = 0; r < nr; ++r) unfolded.col((p * ne + e) * nr + r) = codes_.col(column(p, e, r));
    return fold(unfolded, 1, Shape{n, np, ne, nr});
}

LatentDataset LatentDataset::subset_persons(std::span<const std::string> ids) const {
    std::set<std::string> keep(ids.begin(), ids.end());
    for (const auto& id : keep) {
        if (!axes_.person_index(id)) throw DataError("unknown person id '" + id + "'");
    }
    std::vector<Index> cols;
    std::vector<CellLabel> labels;
    for (Index j = 0; j < codes_.cols(); ++j) {
        if (keep.count(manifest_[static_cast<std::size_t>(j)].person)) {
            cols.push_back(j);
            labels.push_back(manifest_[static_cast<std::size_t>(j)]);
        }
    }
    Matrix sub(codes_.rows(), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) sub.col(static_cast<Index>(i)) = codes_.col(cols[i]);
    return LatentDataset(std::move(sub), std::move(labels), styles_);
}

LatentDataset LatentDataset::style_slice(Index s) const {
    if (!styles_) throw DimensionError("dataset has no style layout");
    if (s < 0 || s >= styles_->styles) throw DimensionError("style index out of range");
    return LatentDataset(codes_.middleRows(s * styles_->width, styles_->width), manifest_);
}

std::filesystem::path manifest_path(const std::filesystem::path& codes_path) {
    std::filesystem::path p = codes_path;
    p += ".manifest";
    return p;
}

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
    detail::ByteWriter w;
    w.bytes(kMatrixMagic);
    w.u32(kMatrixVersion);
    w.u32(0);
    w.u64(static_cast<std::uint64_t>(m.rows()));
    w.u64(static_cast<std::uint64_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) w.f64(m(i, j));
    w.seal();
    detail::write_file_atomic(path, w.buffer());
}

Matrix load_matrix(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    detail::ByteReader r(bytes, path.string());
    if (bytes.size() < kMatrixMagic.size() + 4 || r.bytes(kMatrixMagic.size()) != kMatrixMagic) {
        throw FormatError(path.string() + ": not a latent code matrix (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kMatrixVersion) {
        throw FormatError(path.string() + ": unsupported matrix format version " + std::to_string(version) +
                          " (this build reads version " + std::to_string(kMatrixVersion) + ")");
    }
    r.verify_seal();
    r.u32();  // reserved
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (cols != 0 && rows > (bytes.size() / 8) / cols) throw FormatError(path.string() + ": shape exceeds file size");
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) m(i, j) = r.f64();
    r.expect_end();
    return m;
}

void save_dataset(const LatentDataset& ds, const std::filesystem::path& codes_path) {
    std::ostringstream os;
    os << kManifestTag << ' ' << kManifestVersion << '\n';
    if (ds.styles()) os << "# styles " << ds.styles()->styles << ' ' << ds.styles()->width << '\n';
    os << kManifestHeader << '\n';
    for (const auto& c : ds.manifest()) {
        os << c.person << ',' << to_string(c.expression.emotion) << ',' << c.expression.intensity << ','
           << to_string(c.rotation) << '\n';
    }
    std::string text = os.str();
    char crc[16];
    std::snprintf(crc, sizeof crc, "%08x", detail::crc32(text));
    text += "# crc32 " + std::string(crc) + "\n";

    save_matrix(ds.codes(), codes_path);
    detail::write_file_atomic(manifest_path(codes_path), text);
}

LatentDataset load_dataset(const std::filesystem::path& codes_path) {
    Matrix codes = load_matrix(codes_path);
    const auto mpath = manifest_path(codes_path);
    const std::string text = detail::read_text_file(mpath);
    const std::string where = mpath.string();

    std::vector<CellLabel> cells;
    std::optional<StyleLayout> styles;
    bool saw_tag = false;
    bool sealed = false;
    std::size_t line_start = 0;
    int line_no = 0;
    while (line_start < text.size()) {
        std::size_t end = text.find('\n', line_start);
        if (end == std::string::npos) end = text.size();
        const std::string_view line = trim(std::string_view(text).substr(line_start, end - line_start));
        const std::size_t this_start = line_start;
        line_start = end + 1;
        ++line_no;
        const std::string ctx = where + ":" + std::to_string(line_no);
        if (line.empty()) continue;
        if (sealed) throw FormatError(ctx + ": content after checksum line");
        if (line.starts_with("#")) {
            if (line.starts_with(kManifestTag)) {
                const int v = parse_number<int>(trim(line.substr(kManifestTag.size())), ctx);
                if (v != kManifestVersion) {
                    throw FormatError(ctx + ": unsupported manifest version " + std::to_string(v) +
                                      " (this build reads version " + std::to_string(kManifestVersion) + ")");
                }
                saw_tag = true;
            } else if (line.starts_with("# styles")) {
                const auto parts = split(trim(line.substr(8)), ' ');
                if (parts.size() != 2) throw FormatError(ctx + ": expected '# styles S L'");
                styles = StyleLayout{parse_number<Index>(parts[0], ctx), parse_number<Index>(parts[1], ctx)};
            } else if (line.starts_with("# crc32")) {
                const std::string_view hex = trim(line.substr(7));
                std::uint32_t stored = 0;
                auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), stored, 16);
                if (ec != std::errc() || ptr != hex.data() + hex.size()) {
                    throw FormatError(ctx + ": malformed checksum line");
                }
                if (detail::crc32(std::string_view(text).substr(0, this_start)) != stored) {
                    throw FormatError(ctx + ": manifest checksum mismatch");
                }
                sealed = true;
            }
            continue;
        }
        if (line == kManifestHeader) continue;
        const auto f = split(line, ',');
        if (f.size() != 4) throw FormatError(ctx + ": expected 4 fields person,emotion,intensity,rotation");
        const auto emotion = parse_emotion(f[1]);
        if (!emotion) throw FormatError(ctx + ": unknown emotion '" + std::string(f[1]) + "'");
        const auto rotation = parse_rotation(f[3]);
        if (!rotation) throw FormatError(ctx + ": unknown rotation '" + std::string(f[3]) + "'");
        cells.push_back(CellLabel{std::string(f[0]), ExpressionLabel{*emotion, parse_number<int>(f[2], ctx)}, *rotation});
    }
    if (!saw_tag) throw FormatError(where + ": missing '" + std::string(kManifestTag) + "' header");
    return LatentDataset(std::move(codes), std::move(cells), styles);
}

} // namespace mlm

#include "mlm/persistence.hpp"

#include <string>

#include "binary_io.hpp"
#include "mlm/error.hpp"

namespace mlm {

namespace {

constexpr std::string_view kMagic = "MLMMODEL";
constexpr std::uint32_t kVectorized = 0;
constexpr std::uint32_t kStacked = 1;

void write_matrix(detail::ByteWriter& w, const Matrix& m) {
    w.u64(static_cast<std::uint64_t>(m.rows()));
    w.u64(static_cast<std::uint64_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) w.f64(m(i, j));
}

void write_vector(detail::ByteWriter& w, const Vector& v) {
    w.u64(static_cast<std::uint64_t>(v.size()));
    for (Index i = 0; i < v.size(); ++i) w.f64(v(i));
}

Matrix read_matrix(detail::ByteReader& r, const std::string& what) {
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (cols != 0 && rows > r.remaining() / 8 / cols) throw FormatError(what + ": matrix shape exceeds file size");
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) m(i, j) = r.f64();
    return m;
}

Vector read_vector(detail::ByteReader& r) {
    const std::uint64_t n = r.count(8);
    Vector v(static_cast<Index>(n));
    for (Index i = 0; i < v.size(); ++i) v(i) = r.f64();
    return v;
}

void write_tensor_model(detail::ByteWriter& w, const TensorModel& m) {
    m.check_consistent();
    for (const auto& l : m.mode_labels) w.str(l);

    write_vector(w, m.standardizer.mean);
    write_vector(w, m.standardizer.scale);
    for (bool f : m.standardizer.flagged) w.u8(f ? 1 : 0);

    w.u32(static_cast<std::uint32_t>(m.core.order()));
    for (Index e : m.core.shape()) w.u64(static_cast<std::uint64_t>(e));
    for (double x : m.core.data()) w.f64(x);

    for (const auto& f : m.factors) {
        write_matrix(w, f.u);
        write_vector(w, f.singular_values);
    }

    w.u64(m.axes.persons.size());
    for (const auto& p : m.axes.persons) w.str(p);
    w.u64(m.axes.expressions.size());
    for (const auto& e : m.axes.expressions) {
        w.u8(static_cast<std::uint8_t>(e.emotion));
        w.u8(static_cast<std::uint8_t>(e.intensity));
    }
    w.u64(m.axes.rotations.size());
    for (Rotation r : m.axes.rotations) w.u8(static_cast<std::uint8_t>(r));
}

TensorModel read_tensor_model(detail::ByteReader& r, const std::string& what) {
    TensorModel m;
    for (auto& l : m.mode_labels) l = r.str();

    m.standardizer.mean = read_vector(r);
    m.standardizer.scale = read_vector(r);
    const Index n = m.standardizer.mean.size();
    if (m.standardizer.scale.size() != n) throw FormatError(what + ": standardizer length mismatch");
    m.standardizer.flagged.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) m.standardizer.flagged[static_cast<std::size_t>(i)] = r.u8() != 0;

    const std::uint32_t order = r.u32();
    if (order != 4) throw FormatError(what + ": core must have order 4, found " + std::to_string(order));
    Shape shape(order);
    std::uint64_t total = 1;
    for (auto& e : shape) {
        const std::uint64_t extent = r.u64();
        if (extent < 1 || extent > r.remaining() / 8 / total) throw FormatError(what + ": core shape exceeds file size");
        e = static_cast<Index>(extent);
        total *= extent;
    }
    std::vector<double> data(total);
    for (auto& x : data) x = r.f64();
    m.core = DenseTensor(shape, std::move(data));

    for (auto& f : m.factors) {
        f.u = read_matrix(r, what);
        f.singular_values = read_vector(r);
    }

    const std::uint64_t np = r.count(4);
    m.axes.persons.resize(np);
    for (auto& p : m.axes.persons) p = r.str();
    const std::uint64_t ne = r.count(2);
    m.axes.expressions.resize(ne);
    for (auto& e : m.axes.expressions) {
        const std::uint8_t emotion = r.u8();
        const std::uint8_t intensity = r.u8();
        if (emotion > static_cast<std::uint8_t>(Emotion::Surprise)) throw FormatError(what + ": bad emotion code");
        e = ExpressionLabel{static_cast<Emotion>(emotion), intensity};
        validate(e);
    }
    const std::uint64_t nr = r.count(1);
    m.axes.rotations.resize(nr);
    for (auto& rot : m.axes.rotations) {
        const std::uint8_t code = r.u8();
        if (code > static_cast<std::uint8_t>(Rotation::Right)) throw FormatError(what + ": bad rotation code");
        rot = static_cast<Rotation>(code);
    }
    try {
        m.check_consistent();
    } catch (const DimensionError& e) {
        throw FormatError(what + ": inconsistent model: " + e.what());
    }
    return m;
}

} // namespace

std::vector<std::uint8_t> serialize_model(const AnyModel& model) {
    detail::ByteWriter w;
    w.bytes(kMagic);
    w.u32(kModelFormatVersion);
    if (const auto* t = std::get_if<TensorModel>(&model)) {
        w.u32(kVectorized);
        w.u64(1);
        w.u64(static_cast<std::uint64_t>(t->latent_dim()));
        write_tensor_model(w, *t);
    } else {
        const auto& s = std::get<StackedModel>(model);
        if (s.styles.empty()) throw InvalidArgument("cannot save a stacked model without styles");
        w.u32(kStacked);
        w.u64(s.styles.size());
        w.u64(static_cast<std::uint64_t>(s.width));
        for (const auto& m : s.styles) {
            if (m.latent_dim() != s.width) throw DimensionError("stacked model: style width mismatch");
            write_tensor_model(w, m);
        }
    }
    w.seal();
    return w.buffer();
}

AnyModel deserialize_model(std::span<const std::uint8_t> bytes, const std::string& what) {
    detail::ByteReader r(bytes, what);
    if (bytes.size() < kMagic.size() + 4 || r.bytes(kMagic.size()) != kMagic) {
        throw FormatError(what + ": not a model file (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion) {
        throw FormatError(what + ": unsupported model format version " + std::to_string(version) +
                          " (this build reads version " + std::to_string(kModelFormatVersion) + ")");
    }
    r.verify_seal();
    const std::uint32_t kind = r.u32();
    const std::uint64_t styles = r.u64();
    const std::uint64_t width = r.u64();
    if (kind == kVectorized) {
        if (styles != 1) throw FormatError(what + ": vectorized model must have one block");
        TensorModel m = read_tensor_model(r, what);
        if (static_cast<std::uint64_t>(m.latent_dim()) != width) throw FormatError(what + ": latent size mismatch");
        r.expect_end();
        return m;
    }
    if (kind != kStacked) throw FormatError(what + ": unknown model kind " + std::to_string(kind));
    if (styles == 0 || styles > bytes.size()) throw FormatError(what + ": bad style count");
    StackedModel s;
    s.width = static_cast<Index>(width);
    for (std::uint64_t i = 0; i < styles; ++i) {
        s.styles.push_back(read_tensor_model(r, what));
        if (s.styles.back().latent_dim() != s.width) throw FormatError(what + ": style width mismatch");
    }
    r.expect_end();
    return s;
}

void save_model(const AnyModel& model, const std::filesystem::path& path) {
    detail::write_file_atomic(path, serialize_model(model));
}

AnyModel load_model(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    return deserialize_model(bytes, path.string());
}

StackedModel as_stacked(const AnyModel& model) {
    if (const auto* s = std::get_if<StackedModel>(&model)) return *s;
    const auto& t = std::get<TensorModel>(model);
    return StackedModel{{t}, t.latent_dim()};
}

} // namespace mlm

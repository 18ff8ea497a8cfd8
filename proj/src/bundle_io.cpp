#include "naers/bundle_io.hpp"

#include "naers/error.hpp"
#include "naers/json_io.hpp"

#include <bit>
#include <cstring>
#include <span>

namespace naers::io {

namespace {

static_assert(std::endian::native == std::endian::little, "bundle encoding assumes a little-endian host");

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }

    void str(std::string_view s)
    {
        u64(s.size());
        out_.append(s);
    }

    void doubles(std::span<const double> v)
    {
        u64(v.size());
        for (double d : v)
            f64(d);
    }

    void sizes(const std::vector<std::size_t>& v)
    {
        u64(v.size());
        for (std::size_t s : v)
            u64(s);
    }

    std::string& bytes() { return out_; }

private:
    void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }

    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint8_t u8()
    {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint32_t u32() { return raw<std::uint32_t>(); }
    std::uint64_t u64() { return raw<std::uint64_t>(); }
    double f64() { return raw<double>(); }

    std::size_t count(std::size_t element_bytes)
    {
        const std::uint64_t n = u64();
        if (element_bytes > 0 && n > (bytes_.size() - pos_) / element_bytes)
            corrupt("length field exceeds the file size");
        return static_cast<std::size_t>(n);
    }

    std::string str()
    {
        const std::size_t n = count(1);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }

    std::vector<double> doubles()
    {
        std::vector<double> v(count(8));
        for (double& d : v)
            d = f64();
        return v;
    }

    std::vector<std::size_t> sizes()
    {
        std::vector<std::size_t> v(count(8));
        for (std::size_t& s : v)
            s = static_cast<std::size_t>(u64());
        return v;
    }

    bool done() const { return pos_ == bytes_.size(); }

    [[noreturn]] static void corrupt(const std::string& why)
    {
        throw Error(ErrorCode::corrupt_file, "corrupt model file: " + why);
    }

private:
    void need(std::size_t n) const
    {
        if (bytes_.size() - pos_ < n)
            corrupt("unexpected end of data");
    }

    template <typename T>
    T raw()
    {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

void write_network(Writer& w, const nn::Network& net)
{
    const nn::Architecture& a = net.architecture();
    w.u64(a.input_channels);
    w.u64(a.input_side);
    w.u64(a.input_width);
    w.sizes(a.conv_filters);
    w.sizes(a.dense_widths);
    w.u64(net.parameters().size());
    for (const auto& t : net.parameters()) {
        w.sizes(t.shape());
        w.doubles(t.values());
    }
}

nn::Network read_network(Reader& r)
{
    nn::Architecture a;
    a.input_channels = r.u64();
    a.input_side = r.u64();
    a.input_width = r.u64();
    a.conv_filters = r.sizes();
    a.dense_widths = r.sizes();
    std::vector<nn::Tensor> params(r.count(16));
    for (auto& t : params) {
        auto shape = r.sizes();
        auto values = r.doubles();
        if (nn::element_count(shape) != values.size())
            Reader::corrupt("tensor size does not match its shape");
        t = nn::Tensor(std::move(shape), std::move(values));
    }
    try {
        nn::stage_sides(a);
        return nn::Network::from_parameters(a, std::move(params));
    } catch (const Error& e) {
        Reader::corrupt(e.what());
    }
}

void write_model(Writer& w, const ModalityModel& m)
{
    const DeepFeatureProvider& p = m.provider;
    w.u32(static_cast<std::uint32_t>(p.kind()));
    w.u64(p.members().size());
    for (const auto& net : p.members())
        write_network(w, net);
    w.u64(p.embeddings().size());
    for (const auto& [id, v] : p.embeddings()) {
        w.str(id);
        w.doubles(v);
    }
    w.doubles(m.scaler.mean);
    w.doubles(m.scaler.scale);
    write_network(w, m.classifier);
}

ModalityModel read_model(Reader& r)
{
    ModalityModel m;
    const std::uint32_t kind = r.u32();
    if (kind > static_cast<std::uint32_t>(ProviderKind::external_embedding))
        Reader::corrupt("unknown provider kind");
    std::vector<nn::Network> members(r.count(8));
    for (auto& net : members)
        net = read_network(r);
    EmbeddingTable table;
    const std::size_t n = r.count(16);
    for (std::size_t i = 0; i < n; ++i) {
        std::string id = r.str();
        table.emplace(std::move(id), r.doubles());
    }
    try {
        switch (static_cast<ProviderKind>(kind)) {
        case ProviderKind::none: m.provider = DeepFeatureProvider::none(); break;
        case ProviderKind::regular_cnn:
            if (members.size() != 1)
                Reader::corrupt("regular CNN provider must have one network");
            m.provider = DeepFeatureProvider::regular(std::move(members.front()));
            break;
        case ProviderKind::ensemble_cnn: m.provider = DeepFeatureProvider::ensemble(std::move(members)); break;
        case ProviderKind::external_embedding: m.provider = DeepFeatureProvider::external(std::move(table)); break;
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::corrupt_file)
            throw;
        Reader::corrupt(e.what());
    }
    m.scaler.mean = r.doubles();
    m.scaler.scale = r.doubles();
    if (m.scaler.mean.size() != m.scaler.scale.size())
        Reader::corrupt("scaler vectors differ in length");
    m.classifier = read_network(r);
    return m;
}

} // namespace

std::string encode_bundle(const ModelBundle& bundle)
{
    Writer w;
    w.bytes().append(bundle_magic);
    w.u32(ModelBundle::format_version);
    w.u64(bundle.revision);
    w.u64(bundle.registry.size());
    for (const auto& name : bundle.registry.names())
        w.str(name);
    write_model(w, bundle.face);
    write_model(w, bundle.posture);
    w.u8(bundle.context ? 1 : 0);
    if (bundle.context) {
        const ContextModel& c = *bundle.context;
        w.u64(c.centroids.size());
        for (const auto& v : c.centroids)
            w.doubles(v);
        w.f64(c.threshold);
        w.f64(c.mean_distance);
        w.f64(c.std_distance);
        w.f64(c.z_mult);
        w.u64(c.seed);
    }
    const std::uint32_t crc = crc32(w.bytes());
    w.u32(crc);
    return std::move(w.bytes());
}

ModelBundle decode_bundle(std::string_view bytes)
{
    const std::size_t header = bundle_magic.size() + 4;
    if (bytes.size() < header + 4 || bytes.substr(0, bundle_magic.size()) != bundle_magic)
        Reader::corrupt("missing NAERS header");
    std::uint32_t stored = 0;
    std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
    if (crc32(bytes.substr(0, bytes.size() - 4)) != stored)
        Reader::corrupt("checksum mismatch");

    Reader r(bytes.substr(bundle_magic.size(), bytes.size() - bundle_magic.size() - 4));
    const std::uint32_t version = r.u32();
    if (version != ModelBundle::format_version)
        throw Error(ErrorCode::version_mismatch, "model file version " + std::to_string(version) +
                                                     " is not supported (expected " +
                                                     std::to_string(ModelBundle::format_version) + ")");
    ModelBundle b;
    b.revision = r.u64();
    std::vector<std::string> names(r.count(8));
    for (auto& n : names)
        n = r.str();
    try {
        b.registry = ClassRegistry(std::move(names));
    } catch (const Error& e) {
        Reader::corrupt(e.what());
    }
    b.face = read_model(r);
    b.posture = read_model(r);
    if (r.u8() != 0) {
        ContextModel c;
        c.centroids.resize(r.count(8));
        for (auto& v : c.centroids)
            v = r.doubles();
        c.threshold = r.f64();
        c.mean_distance = r.f64();
        c.std_distance = r.f64();
        c.z_mult = r.f64();
        c.seed = r.u64();
        b.context = std::move(c);
    }
    if (!r.done())
        Reader::corrupt("trailing bytes after payload");
    return b;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path)
{
    write_file_atomic(path, encode_bundle(bundle));
}

ModelBundle load_bundle(const std::filesystem::path& path) { return decode_bundle(read_file(path)); }

} // namespace naers::io

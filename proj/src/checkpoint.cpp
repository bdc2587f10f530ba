#include "moeeco/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "moeeco/errors.hpp"

namespace moeeco {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'E', 'E', 'C', 'O', '0', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

struct Reader {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw CorruptCheckpoint("truncated checkpoint");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
        pos += n;
        return s;
    }
};

}  // namespace

std::vector<std::uint8_t> save_checkpoint(const CheckpointState& state) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 8);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(state.config_text.size()));
    out.insert(out.end(), state.config_text.begin(), state.config_text.end());
    put_u64(out, state.epoch_completed);
    put_u64(out, state.global_step);
    put_u64(out, state.adam_step);
    put_u64(out, state.seed);
    put_u32(out, static_cast<std::uint32_t>(state.tensors.size()));
    for (const NamedTensor& t : state.tensors) {
        put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        std::size_t count = 1;
        for (std::uint32_t d : t.shape) {
            put_u32(out, d);
            count *= d;
        }
        if (count != t.data.size()) throw CorruptCheckpoint("tensor shape/data mismatch on save");
        for (double d : t.data) put_f64(out, d);
    }
    return out;
}

CheckpointState load_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader r{bytes};
    const std::string magic = r.str(8);
    if (std::memcmp(magic.data(), kMagic, 8) != 0) throw CorruptCheckpoint("bad magic");
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw UnsupportedVersion("checkpoint version " + std::to_string(version));

    CheckpointState state;
    state.config_text = r.str(r.u32());
    state.epoch_completed = r.u64();
    state.global_step = r.u64();
    state.adam_step = r.u64();
    state.seed = r.u64();
    const std::uint32_t n_tensors = r.u32();
    state.tensors.resize(n_tensors);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        NamedTensor& t = state.tensors[i];
        t.name = r.str(r.u32());
        const std::uint32_t ndim = r.u32();
        if (ndim > 4) throw CorruptCheckpoint("implausible tensor rank");
        std::size_t count = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            t.shape.push_back(r.u32());
            count *= t.shape.back();
        }
        t.data.resize(count);
        for (std::size_t k = 0; k < count; ++k) t.data[k] = r.f64();
    }
    if (r.pos != bytes.size()) throw CorruptCheckpoint("trailing bytes");
    return state;
}

void write_checkpoint_file(const std::string& path, const CheckpointState& state) {
    const auto bytes = save_checkpoint(state);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CorruptCheckpoint("cannot open for write: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CorruptCheckpoint("short write: " + path);
}

CheckpointState read_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptCheckpoint("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return load_checkpoint(bytes);
}

CheckpointState snapshot(MoeModel& model, AdamW& opt, const std::string& config_text,
                         std::uint64_t epoch_completed, std::uint64_t global_step,
                         std::uint64_t seed) {
    CheckpointState state;
    state.config_text = config_text;
    state.epoch_completed = epoch_completed;
    state.global_step = global_step;
    state.adam_step = opt.step_count();
    state.seed = seed;
    const auto params = model.params();
    for (std::size_t b = 0; b < params.size(); ++b) {
        NamedTensor t;
        t.name = params[b].name;
        for (int d : params[b].shape) t.shape.push_back(static_cast<std::uint32_t>(d));
        t.data = *params[b].data;
        state.tensors.push_back(std::move(t));
    }
    for (std::size_t b = 0; b < params.size(); ++b)
        state.tensors.push_back({"adam.m." + params[b].name, {static_cast<std::uint32_t>(opt.moment1()[b].size())}, opt.moment1()[b]});
    for (std::size_t b = 0; b < params.size(); ++b)
        state.tensors.push_back({"adam.v." + params[b].name, {static_cast<std::uint32_t>(opt.moment2()[b].size())}, opt.moment2()[b]});
    return state;
}

void restore(const CheckpointState& state, MoeModel& model, AdamW& opt) {
    auto find = [&](const std::string& name) -> const NamedTensor& {
        for (const NamedTensor& t : state.tensors)
            if (t.name == name) return t;
        throw CorruptCheckpoint("missing tensor: " + name);
    };
    opt.init(model);
    opt.set_step_count(state.adam_step);
    const auto params = model.params();
    for (std::size_t b = 0; b < params.size(); ++b) {
        const NamedTensor& t = find(params[b].name);
        if (t.data.size() != params[b].data->size())
            throw CorruptCheckpoint("tensor size mismatch: " + params[b].name);
        *params[b].data = t.data;
        const NamedTensor& m = find("adam.m." + params[b].name);
        const NamedTensor& v = find("adam.v." + params[b].name);
        if (m.data.size() != params[b].data->size() || v.data.size() != params[b].data->size())
            throw CorruptCheckpoint("moment size mismatch: " + params[b].name);
        opt.moment1()[b] = m.data;
        opt.moment2()[b] = v.data;
    }
}

}  // namespace moeeco

#include "sphand/skeleton_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

namespace sphand {

static_assert(std::endian::native == std::endian::little,
              "SKTF writer assumes a little-endian host");

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

bool parse_double(std::string_view tok, double& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc{} && ptr == tok.data() + tok.size();
}

bool parse_int(std::string_view tok, long long& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc{} && ptr == tok.data() + tok.size();
}

} // namespace

// ---------------------------------------------------------------------------
// FPHA
// ---------------------------------------------------------------------------

SkeletonSequence parse_fpha(std::istream& in) {
    constexpr int kJoints = 21;
    constexpr std::size_t kTokens = 1 + kJoints * 3;

    std::vector<double> coords;
    std::string line;
    std::size_t line_no = 0;
    long long prev_index = std::numeric_limits<long long>::min();
    int frames = 0;

    while (std::getline(in, line)) {
        ++line_no;
        auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (tokens.size() != kTokens)
            throw ParseError(line_no, "expected " + std::to_string(kTokens) + " tokens, got " +
                                          std::to_string(tokens.size()));
        long long index = 0;
        if (!parse_int(tokens[0], index))
            throw ParseError(line_no, "frame index is not an integer: '" + std::string(tokens[0]) + "'");
        if (index <= prev_index)
            throw ParseError(line_no, "frame index not strictly increasing (" +
                                          std::to_string(index) + " after " +
                                          std::to_string(prev_index) + ")");
        prev_index = index;
        for (std::size_t k = 1; k < kTokens; ++k) {
            double v = 0.0;
            if (!parse_double(tokens[k], v))
                throw ParseError(line_no, "non-numeric token '" + std::string(tokens[k]) + "'");
            if (!std::isfinite(v))
                throw ParseError(line_no, "non-finite coordinate '" + std::string(tokens[k]) + "'");
            coords.push_back(v);
        }
        ++frames;
    }

    if (frames == 0) throw ParseError(0, "empty FPHA skeleton stream");

    SkeletonSequence seq;
    seq.frames = frames;
    seq.bodies = 1;
    seq.joints = kJoints;
    seq.coords = std::move(coords);
    seq.joint_names = fpha_joint_names();
    seq.check_invariants();
    return seq;
}

// ---------------------------------------------------------------------------
// NTU
// ---------------------------------------------------------------------------

namespace {

struct LineReader {
    std::istream& in;
    std::size_t line_no = 0;

    // Returns false on clean EOF; skips blank lines.
    bool next(std::string& out) {
        while (std::getline(in, out)) {
            ++line_no;
            if (!split_ws(out).empty()) return true;
        }
        return false;
    }
};

} // namespace

SkeletonSequence parse_ntu(std::istream& in) {
    constexpr int kJoints = 25;
    constexpr std::size_t kJointFields = 12;

    LineReader reader{in};
    std::string line;

    if (!reader.next(line)) throw ParseError(0, "empty NTU skeleton stream");
    long long frame_count = 0;
    if (!parse_int(split_ws(line)[0], frame_count) || frame_count < 1)
        throw ParseError(reader.line_no, "invalid frame count '" + line + "'");

    // frame -> body -> 25 xyz triples
    std::vector<std::vector<std::array<double, 3>>> frames;
    frames.reserve(static_cast<std::size_t>(frame_count));
    int max_bodies = 0;

    for (long long f = 0; f < frame_count; ++f) {
        const std::string frame_tag = "frame " + std::to_string(f);
        if (!reader.next(line))
            throw ParseError(reader.line_no, frame_tag + ": unexpected end of input (body count)");
        long long body_count = 0;
        if (!parse_int(split_ws(line)[0], body_count) || body_count < 0)
            throw ParseError(reader.line_no, frame_tag + ": invalid body count '" + line + "'");

        std::vector<std::array<double, 3>> bodies_flat;
        bodies_flat.reserve(static_cast<std::size_t>(body_count) * kJoints);

        for (long long b = 0; b < body_count; ++b) {
            if (!reader.next(line))
                throw ParseError(reader.line_no, frame_tag + ": unexpected end of input (body info)");
            // body info line: id + tracking fields, content not retained

            if (!reader.next(line))
                throw ParseError(reader.line_no, frame_tag + ": unexpected end of input (joint count)");
            long long joint_count = 0;
            if (!parse_int(split_ws(line)[0], joint_count))
                throw ParseError(reader.line_no, frame_tag + ": invalid joint count '" + line + "'");
            if (joint_count != kJoints)
                throw ParseError(reader.line_no, frame_tag + ": joint count " +
                                                     std::to_string(joint_count) + " != 25");

            for (int j = 0; j < kJoints; ++j) {
                if (!reader.next(line))
                    throw ParseError(reader.line_no, frame_tag + ": unexpected end of input (joint " +
                                                         std::to_string(j) + ")");
                auto tokens = split_ws(line);
                if (tokens.size() != kJointFields)
                    throw ParseError(reader.line_no, frame_tag + ": joint line has " +
                                                         std::to_string(tokens.size()) +
                                                         " fields, expected 12");
                std::array<double, 3> xyz{};
                for (std::size_t k = 0; k < kJointFields; ++k) {
                    double v = 0.0;
                    if (!parse_double(tokens[k], v))
                        throw ParseError(reader.line_no, frame_tag + ": non-numeric field '" +
                                                             std::string(tokens[k]) + "'");
                    if (k < 3) {
                        if (!std::isfinite(v))
                            throw ParseError(reader.line_no, frame_tag + ": non-finite coordinate");
                        xyz[k] = v;
                    }
                }
                bodies_flat.push_back(xyz);
            }
        }
        max_bodies = std::max(max_bodies, static_cast<int>(body_count));
        frames.push_back(std::move(bodies_flat));
    }

    if (reader.next(line))
        throw ParseError(reader.line_no, "trailing content after declared frames");

    const int m = std::max(max_bodies, 1);
    SkeletonSequence seq = SkeletonSequence::zeros(static_cast<int>(frame_count), m, kJoints);
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const auto& flat = frames[t];
        const int present = static_cast<int>(flat.size()) / kJoints;
        for (int b = 0; b < present; ++b)
            for (int j = 0; j < kJoints; ++j) {
                double* dst = seq.at(static_cast<int>(t), b, j);
                const auto& xyz = flat[static_cast<std::size_t>(b) * kJoints + j];
                dst[0] = xyz[0];
                dst[1] = xyz[1];
                dst[2] = xyz[2];
            }
    }
    seq.joint_names = ntu_joint_names();
    seq.check_invariants();
    return seq;
}

void apply_ntu_filename_metadata(const std::string& filename, SkeletonSequence& seq) {
    static const std::regex pattern(R"(S(\d{3})C(\d{3})P(\d{3})R(\d{3})A(\d{3}))");
    std::smatch m;
    if (!std::regex_search(filename, m, pattern)) return;
    seq.setup_id = std::stoi(m[1].str());
    seq.subject_id = std::stoi(m[3].str());
    seq.label = std::stoi(m[5].str()) - 1;
}

const std::vector<std::string>& fpha_joint_names() {
    static const std::vector<std::string> names = {
        "wrist",  "tmcp",   "imcp",   "mmcp",   "rmcp",   "pmcp",   "tpip",
        "tdip",   "ttip",   "ipip",   "idip",   "itip",   "mpip",   "mdip",
        "mtip",   "rpip",   "rdip",   "rtip",   "ppip",   "pdip",   "ptip"};
    return names;
}

const std::vector<std::string>& ntu_joint_names() {
    static const std::vector<std::string> names = {
        "spine_base",     "spine_mid",     "neck",          "head",
        "shoulder_left",  "elbow_left",    "wrist_left",    "hand_left",
        "shoulder_right", "elbow_right",   "wrist_right",   "hand_right",
        "hip_left",       "knee_left",     "ankle_left",    "foot_left",
        "hip_right",      "knee_right",    "ankle_right",   "foot_right",
        "spine_shoulder", "handtip_left",  "thumb_left",    "handtip_right",
        "thumb_right"};
    return names;
}

// ---------------------------------------------------------------------------
// SKTF container
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_raw(std::istream& in, T& value) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    return in.gcount() == static_cast<std::streamsize>(sizeof(T));
}

} // namespace

void write_tensor(const NdArray& tensor, std::ostream& out, SktfDtype dtype) {
    if (tensor.dims.empty())
        throw ContainerError(ContainerErrorKind::invalid_dims, "tensor has no dimensions");
    for (std::size_t d : tensor.dims)
        if (d == 0)
            throw ContainerError(ContainerErrorKind::invalid_dims, "tensor has a zero dimension");
    if (dtype != SktfDtype::f32 && dtype != SktfDtype::f64)
        throw ContainerError(ContainerErrorKind::unsupported_dtype, "unsupported dtype code");

    out.write("SKTF", 4);
    write_raw(out, kSktfVersion);
    write_raw(out, static_cast<std::uint32_t>(dtype));
    write_raw(out, static_cast<std::uint32_t>(tensor.dims.size()));
    for (std::size_t d : tensor.dims) write_raw(out, static_cast<std::uint64_t>(d));

    if (dtype == SktfDtype::f64) {
        out.write(reinterpret_cast<const char*>(tensor.data.data()),
                  static_cast<std::streamsize>(tensor.data.size() * sizeof(double)));
    } else {
        std::vector<float> buf(tensor.data.begin(), tensor.data.end());
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw ContainerError(ContainerErrorKind::truncated_payload, "write failed");
}

NdArray read_tensor(std::istream& in, SktfDtype* dtype_out) {
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4)
        throw ContainerError(ContainerErrorKind::truncated_header, "stream shorter than magic");
    if (std::memcmp(magic, "SKTF", 4) != 0)
        throw ContainerError(ContainerErrorKind::bad_magic, "bad magic bytes");

    std::uint32_t version = 0, dtype_code = 0, ndims = 0;
    if (!read_raw(in, version) || !read_raw(in, dtype_code) || !read_raw(in, ndims))
        throw ContainerError(ContainerErrorKind::truncated_header, "truncated header");
    if (version != kSktfVersion)
        throw ContainerError(ContainerErrorKind::unsupported_version,
                             "unsupported container version " + std::to_string(version));
    if (dtype_code != static_cast<std::uint32_t>(SktfDtype::f32) &&
        dtype_code != static_cast<std::uint32_t>(SktfDtype::f64))
        throw ContainerError(ContainerErrorKind::unsupported_dtype,
                             "unsupported dtype code " + std::to_string(dtype_code));
    if (ndims == 0 || ndims > 64)
        throw ContainerError(ContainerErrorKind::invalid_dims,
                             "invalid rank " + std::to_string(ndims));

    std::vector<std::size_t> dims(ndims);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < ndims; ++i) {
        std::uint64_t d = 0;
        if (!read_raw(in, d))
            throw ContainerError(ContainerErrorKind::truncated_header, "truncated dims");
        if (d == 0)
            throw ContainerError(ContainerErrorKind::invalid_dims, "zero dimension");
        if (count > std::numeric_limits<std::size_t>::max() / d)
            throw ContainerError(ContainerErrorKind::invalid_dims, "dimension overflow");
        dims[i] = static_cast<std::size_t>(d);
        count *= dims[i];
    }

    const SktfDtype dtype = static_cast<SktfDtype>(dtype_code);
    if (dtype_out) *dtype_out = dtype;

    std::vector<double> data(count);
    if (dtype == SktfDtype::f64) {
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
            throw ContainerError(ContainerErrorKind::truncated_payload, "truncated payload");
    } else {
        std::vector<float> buf(count);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(count * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(count * sizeof(float)))
            throw ContainerError(ContainerErrorKind::truncated_payload, "truncated payload");
        std::copy(buf.begin(), buf.end(), data.begin());
    }
    return NdArray(std::move(dims), std::move(data));
}

void write_tensor_file(const NdArray& tensor, const std::string& path, SktfDtype dtype) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ContainerError(ContainerErrorKind::truncated_payload,
                                   "cannot open for writing: " + path);
    write_tensor(tensor, out, dtype);
}

NdArray read_tensor_file(const std::string& path, SktfDtype* dtype_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContainerError(ContainerErrorKind::truncated_header,
                                  "cannot open for reading: " + path);
    return read_tensor(in, dtype_out);
}

// ---------------------------------------------------------------------------
// Sequence datasets
// ---------------------------------------------------------------------------

NdArray sequence_to_tensor(const SkeletonSequence& seq) {
    seq.check_invariants();
    return NdArray({static_cast<std::size_t>(seq.frames), static_cast<std::size_t>(seq.bodies),
                    static_cast<std::size_t>(seq.joints), 3},
                   seq.coords);
}

NdArray sequences_to_tensor(const std::vector<SkeletonSequence>& seqs) {
    if (seqs.empty()) throw ShapeError("cannot stack an empty sequence list");
    const auto& first = seqs.front();
    for (const auto& s : seqs) {
        s.check_invariants();
        if (!s.shape_matches(first))
            throw ShapeError("sequences have inconsistent shapes; cannot stack");
    }
    NdArray out = NdArray::zeros({seqs.size(), static_cast<std::size_t>(first.frames),
                                  static_cast<std::size_t>(first.bodies),
                                  static_cast<std::size_t>(first.joints), 3});
    const std::size_t per = first.coords.size();
    for (std::size_t n = 0; n < seqs.size(); ++n)
        std::copy(seqs[n].coords.begin(), seqs[n].coords.end(), out.data.begin() + n * per);
    return out;
}

std::vector<SkeletonSequence> tensor_to_sequences(const NdArray& tensor) {
    std::vector<std::size_t> dims = tensor.dims;
    if (dims.size() == 4) dims.insert(dims.begin(), 1);
    if (dims.size() != 5 || dims[4] != 3)
        throw ShapeError("expected an N x T x M x V x 3 (or T x M x V x 3) tensor");
    const std::size_t n = dims[0], t = dims[1], m = dims[2], v = dims[3];
    const std::size_t per = t * m * v * 3;

    std::vector<SkeletonSequence> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SkeletonSequence s;
        s.frames = static_cast<int>(t);
        s.bodies = static_cast<int>(m);
        s.joints = static_cast<int>(v);
        s.coords.assign(tensor.data.begin() + i * per, tensor.data.begin() + (i + 1) * per);
        s.check_invariants();
        out.push_back(std::move(s));
    }
    return out;
}

void write_labels_file(const std::vector<int>& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    for (int l : labels) out << l << "\n";
}

std::vector<int> read_labels_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open for reading: " + path);
    std::vector<int> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        long long v = 0;
        if (tokens.size() != 1 || !parse_int(tokens[0], v))
            throw ParseError(line_no, "expected one integer label per line");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

} // namespace sphand

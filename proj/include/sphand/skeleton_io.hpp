#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sphand/ndarray.hpp"
#include "sphand/skeleton.hpp"

namespace sphand {

// ---------------------------------------------------------------------------
// Text skeleton formats
// ---------------------------------------------------------------------------

// FPHA skeleton.txt: one line per frame, "index x0 y0 z0 ... x20 y20 z20"
// (64 whitespace-separated tokens). Coordinates are copied verbatim.
SkeletonSequence parse_fpha(std::istream& in);

// NTU .skeleton: frame count, then per frame a body count, per body an info
// line, a joint count (must be 25) and 25 joint lines of 12 reals; only the
// first three reals of each joint line are retained. Frames with fewer
// bodies than the sequence maximum are zero-padded.
SkeletonSequence parse_ntu(std::istream& in);

// Metadata from an NTU-style file name such as S001C002P003R002A045;
// fills setup_id, subject_id and 0-based label when the pattern matches.
void apply_ntu_filename_metadata(const std::string& filename, SkeletonSequence& seq);

const std::vector<std::string>& fpha_joint_names(); // 21 entries
const std::vector<std::string>& ntu_joint_names();  // 25 entries

// ---------------------------------------------------------------------------
// SKTF binary tensor container
// ---------------------------------------------------------------------------
// magic "SKTF" | u32 version (=1) | u32 dtype | u32 ndims | u64 dims[ndims]
// | row-major little-endian payload, last dimension fastest.

enum class SktfDtype : std::uint32_t { f32 = 1, f64 = 2 };

inline constexpr std::uint32_t kSktfVersion = 1;

void write_tensor(const NdArray& tensor, std::ostream& out, SktfDtype dtype = SktfDtype::f64);
NdArray read_tensor(std::istream& in, SktfDtype* dtype_out = nullptr);

void write_tensor_file(const NdArray& tensor, const std::string& path,
                       SktfDtype dtype = SktfDtype::f64);
NdArray read_tensor_file(const std::string& path, SktfDtype* dtype_out = nullptr);

// ---------------------------------------------------------------------------
// Sequence datasets as SKTF + label sidecar
// ---------------------------------------------------------------------------

// Stacks same-shape sequences into an N x T x M x V x 3 tensor.
NdArray sequences_to_tensor(const std::vector<SkeletonSequence>& seqs);

// Accepts the 5-D stacked layout or a single-sequence T x M x V x 3 tensor.
std::vector<SkeletonSequence> tensor_to_sequences(const NdArray& tensor);

NdArray sequence_to_tensor(const SkeletonSequence& seq); // T x M x V x 3

void write_labels_file(const std::vector<int>& labels, const std::string& path);
std::vector<int> read_labels_file(const std::string& path);

} // namespace sphand

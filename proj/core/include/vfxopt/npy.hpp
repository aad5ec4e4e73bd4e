#pragma once

#include "vfxopt/tensor.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace vfxopt {

/// Tensor files are NPY v1.0: little-endian float32, C order, rank 4.
class NpyError : public Error {
public:
  enum class Kind {
    io,
    malformed_header,
    dtype_mismatch,
    fortran_order,
    shape_rank,
    truncated_payload,
  };

  NpyError(Kind kind, const std::string &message);

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

std::string encode_npy(const LatentTensor &t);
LatentTensor decode_npy(std::string_view bytes);

void save_tensor(const LatentTensor &t, const std::filesystem::path &path);
LatentTensor load_tensor(const std::filesystem::path &path);

} // namespace vfxopt

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mlstm::ddp {

enum class Transport {
  kHalf,    // payloads quantized to binary16 on the wire
  kSingle,  // payloads sent as binary32 (fp32 training mode)
};

struct RingStats {
  std::size_t steps = 0;                     // 2 (N - 1)
  std::vector<std::uint64_t> bytes_sent;     // per worker
};

enum class Reduction {
  kMean,  // the owner of a finished chunk divides it by N
  kSum,   // inputs were already divided by N at the workers
};

struct RingResult {
  std::vector<float> reduced;  // identical on every worker
  RingStats stats;
};

/// Ring all-reduce over N equal-length buffers. The buffer is cut into N
/// chunks; during N - 1 scatter-reduce steps worker w sends chunk (w - s) mod N
/// to worker w + 1, which adds it to its own copy in binary32. Partial sums
/// travel at the transport precision. The owner of each finished chunk divides
/// by N (kMean only) and the result circulates for N - 1 all-gather steps, so
/// every worker ends with the same bytes.
///
/// Under Transport::kHalf the inputs are first rounded to binary16 (they are
/// the workers' half-precision gradient buffers). Non-finite values propagate;
/// callers treat them as overflow. Throws ShapeError on length mismatch or an
/// empty worker list.
RingResult ring_allreduce(std::span<const std::vector<float>> buffers, Transport transport,
                          Reduction reduction = Reduction::kMean);

/// Bytes one worker transmits for a buffer of `elements` values: 2 (N - 1) / N
/// of the buffer when N divides it.
std::uint64_t ring_payload_bytes(std::size_t elements, std::size_t workers, Transport transport);

}  // namespace mlstm::ddp

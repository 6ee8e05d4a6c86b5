#include "mlstm/ddp/ring_allreduce.hpp"

#include "mlstm/common/error.hpp"
#include "mlstm/numerics/half.hpp"

namespace mlstm::ddp {

namespace {

struct Chunk {
  std::size_t begin;
  std::size_t end;
};

Chunk chunk_bounds(std::size_t length, std::size_t n, std::size_t c) {
  return {c * length / n, (c + 1) * length / n};
}

std::size_t element_bytes(Transport t) { return t == Transport::kHalf ? 2 : 4; }

float wire(float x, Transport t) {
  return t == Transport::kHalf ? numerics::round_to_half(x) : x;
}

}  // namespace

RingResult ring_allreduce(std::span<const std::vector<float>> buffers, Transport transport,
                          Reduction reduction) {
  const std::size_t n = buffers.size();
  if (n == 0) {
    throw ShapeError("ring_allreduce: no workers");
  }
  const std::size_t length = buffers[0].size();
  for (const auto& b : buffers) {
    if (b.size() != length) {
      throw ShapeError("ring_allreduce: buffers differ in length");
    }
  }

  // acc[w] is worker w's working copy; it starts as the local buffer on the
  // transport grid and accumulates received partial sums in binary32.
  std::vector<std::vector<float>> acc(buffers.begin(), buffers.end());
  if (transport == Transport::kHalf) {
    for (auto& a : acc) {
      numerics::round_to_half(std::span<float>(a));
    }
  }

  RingResult out;
  out.stats.steps = 2 * (n - 1);
  out.stats.bytes_sent.assign(n, 0);
  const std::size_t eb = element_bytes(transport);

  // Scatter-reduce. All sends of a step read the state from before the step.
  std::vector<float> payload;
  for (std::size_t s = 0; s + 1 < n; ++s) {
    std::vector<std::vector<float>> inbox(n);
    for (std::size_t w = 0; w < n; ++w) {
      const std::size_t c = (w + n - s) % n;
      const Chunk ch = chunk_bounds(length, n, c);
      payload.assign(acc[w].begin() + static_cast<std::ptrdiff_t>(ch.begin),
                     acc[w].begin() + static_cast<std::ptrdiff_t>(ch.end));
      for (float& v : payload) {
        v = wire(v, transport);
      }
      out.stats.bytes_sent[w] += payload.size() * eb;
      inbox[(w + 1) % n] = payload;
    }
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t sender = (r + n - 1) % n;
      const std::size_t c = (sender + n - s) % n;
      const Chunk ch = chunk_bounds(length, n, c);
      for (std::size_t i = ch.begin; i < ch.end; ++i) {
        acc[r][i] = inbox[r][i - ch.begin] + acc[r][i];
      }
    }
  }

  // Worker w now owns the full sum of chunk (w + 1) mod N. The owner scales it
  // and puts it on the wire; every worker, owner included, keeps the wire value.
  out.reduced.assign(length, 0.0F);
  const float n_f = reduction == Reduction::kMean ? static_cast<float>(n) : 1.0F;
  for (std::size_t w = 0; w < n; ++w) {
    const std::size_t c = (w + 1) % n;
    const Chunk ch = chunk_bounds(length, n, c);
    for (std::size_t i = ch.begin; i < ch.end; ++i) {
      out.reduced[i] = wire(acc[w][i] / n_f, transport);
    }
  }
  // All-gather: each finished chunk is forwarded N - 1 times around the ring.
  for (std::size_t s = 0; s + 1 < n; ++s) {
    for (std::size_t w = 0; w < n; ++w) {
      const std::size_t c = (w + 1 + n - s) % n;
      const Chunk ch = chunk_bounds(length, n, c);
      out.stats.bytes_sent[w] += (ch.end - ch.begin) * eb;
    }
  }
  return out;
}

std::uint64_t ring_payload_bytes(std::size_t elements, std::size_t workers, Transport transport) {
  if (workers <= 1) {
    return 0;
  }
  return 2 * (workers - 1) * elements * element_bytes(transport) / workers;
}

}  // namespace mlstm::ddp

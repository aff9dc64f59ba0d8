#pragma once

#include <cstdint>

namespace multipd {

// Identifies one reproducible random stream. Replicated experiments assign
// stream_id = base + replicate index, so results do not depend on how
// replicates are scheduled across threads.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;

    SeedSpec substream(std::uint64_t offset) const {
        return SeedSpec{master_seed, stream_id + offset};
    }
};

// xoshiro256++ generator; the state is seeded by splitmix64 applied to
// (master_seed, stream_id), so each SeedSpec is an independent stream.
class Rng {
  public:
    explicit Rng(SeedSpec seed);

    std::uint64_t next_u64();

    // Uniform on the open interval (0, 1); never returns an endpoint.
    double uniform();

    // Standard normal via the Marsaglia polar method (one spare cached).
    double normal();

    // Gamma(shape, 1). Marsaglia-Tsang for shape >= 1; for shape < 1 the
    // boost-by-one transform: Gamma(shape+1) * U^(1/shape).
    double gamma(double shape);

    // Beta(1, theta) by inversion: 1 - U^(1/theta).
    double beta_one(double theta);

  private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace multipd

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "fiberlab/alphabet.hpp"
#include "fiberlab/rng.hpp"

namespace fiberlab {

using BigInt = boost::multiprecision::cpp_int;

namespace detail {

inline std::vector<int> integer_levels(const AmplitudeAlphabet& a) {
    std::vector<int> lv;
    lv.reserve(a.size());
    for (double v : a.levels) {
        const int i = static_cast<int>(std::lround(v));
        if (std::abs(v - i) > 1e-9 || i < 1)
            throw std::invalid_argument("shaping: levels must be positive integers");
        lv.push_back(i);
    }
    return lv;
}

}  // namespace detail

/// Exact completion counts over energy-capped sequences: table(pos, e) is the
/// number of ways to fill positions pos..length-1 when the energy accumulated
/// so far is e, choosing per position one of the symbol energies (each energy
/// may stand for several distinct symbols, given by its multiplicity).
/// Counts use arbitrary-precision integers; they overflow 64 bits already at
/// moderate block lengths.
class EnergyTrellis {
public:
    EnergyTrellis(std::vector<long> symbol_energies, std::vector<BigInt> multiplicity, int length,
                  long cap)
        : energies_(std::move(symbol_energies)),
          mult_(std::move(multiplicity)),
          length_(length),
          cap_(cap) {
        if (energies_.empty() || energies_.size() != mult_.size())
            throw std::invalid_argument("EnergyTrellis: empty or mismatched energy/multiplicity");
        if (!std::is_sorted(energies_.begin(), energies_.end()))
            throw std::invalid_argument("EnergyTrellis: energies must be ascending");
        if (length_ < 1 || cap_ < 0) throw std::invalid_argument("EnergyTrellis: bad length or cap");
        table_.assign(length_ + 1, std::vector<BigInt>(cap_ + 1));
        for (long e = 0; e <= cap_; ++e) table_[length_][e] = 1;
        for (int pos = length_ - 1; pos >= 0; --pos) {
            for (long e = 0; e <= cap_; ++e) {
                BigInt sum = 0;
                for (std::size_t k = 0; k < energies_.size(); ++k) {
                    const long ne = e + energies_[k];
                    if (ne > cap_) break;
                    sum += mult_[k] * table_[pos + 1][ne];
                }
                table_[pos][e] = std::move(sum);
            }
        }
    }

    const BigInt& completions(int pos, long energy) const { return table_[pos][energy]; }
    const BigInt& total() const { return table_[0][0]; }
    int length() const { return length_; }
    long cap() const { return cap_; }
    std::span<const long> energies() const { return energies_; }
    std::span<const BigInt> multiplicities() const { return mult_; }

private:
    std::vector<long> energies_;
    std::vector<BigInt> mult_;
    int length_;
    long cap_;
    std::vector<std::vector<BigInt>> table_;
};

namespace detail {

/// Histogram of exact block energies: counts[e] = number of sequences with
/// total energy exactly e. Forward DP keeping one row; used for cap searches
/// without rebuilding a trellis per candidate cap.
inline std::vector<BigInt> energy_histogram(std::span<const long> energies,
                                            std::span<const BigInt> mult, int length, long max_energy) {
    std::vector<BigInt> cur(max_energy + 1), next(max_energy + 1);
    cur[0] = 1;
    for (int pos = 0; pos < length; ++pos) {
        std::fill(next.begin(), next.end(), BigInt(0));
        for (long e = 0; e <= max_energy; ++e) {
            if (cur[e] == 0) continue;
            for (std::size_t k = 0; k < energies.size(); ++k) {
                const long ne = e + energies[k];
                if (ne > max_energy) break;
                next[ne] += cur[e] * mult[k];
            }
        }
        std::swap(cur, next);
    }
    return cur;
}

inline std::vector<long> level_energies(const std::vector<int>& levels) {
    std::vector<long> e;
    e.reserve(levels.size());
    for (int v : levels) e.push_back(static_cast<long>(v) * v);
    return e;
}

}  // namespace detail

/// Number of length-`length` sequences over {1,3,...,2M-1} with total energy
/// <= energy_cap. Returns 0 when the cap is below the minimum energy.
inline BigInt count_sequences(int M, int length, long energy_cap) {
    if (M < 1 || length < 1) throw std::invalid_argument("count_sequences: M and length must be >= 1");
    if (energy_cap < length) return 0;
    const auto levels = detail::integer_levels(make_qam_alphabet(M));
    const long max_sym = static_cast<long>(levels.back()) * levels.back();
    const long cap = std::min(energy_cap, max_sym * length);
    std::vector<BigInt> mult(levels.size(), BigInt(1));
    EnergyTrellis t(detail::level_energies(levels), mult, length, cap);
    return t.total();
}

/// Smallest energy cap on the achievable energy grid whose sequence count
/// reaches 2^target_bits. Energies of odd amplitudes are = length (mod 8), so
/// the scan works on the exact-energy histogram.
inline long min_cap_for_rate(int M, int length_1d, int target_bits) {
    if (target_bits < 0) throw std::invalid_argument("min_cap_for_rate: negative target");
    const double max_bits = length_1d * std::log2(static_cast<double>(M));
    if (target_bits > max_bits + 1e-9)
        throw std::invalid_argument("min_cap_for_rate: target exceeds length*log2(M) bits");
    const auto levels = detail::integer_levels(make_qam_alphabet(M));
    const long max_energy = static_cast<long>(levels.back()) * levels.back() * length_1d;
    std::vector<BigInt> mult(levels.size(), BigInt(1));
    const auto hist =
        detail::energy_histogram(detail::level_energies(levels), mult, length_1d, max_energy);
    const BigInt need = BigInt(1) << target_bits;
    BigInt cum = 0;
    for (long e = 0; e <= max_energy; ++e) {
        cum += hist[e];
        if (cum >= need) return e;
    }
    throw std::invalid_argument("min_cap_for_rate: infeasible target");
}

/// A shaped block together with the payload index it encodes.
struct ShapedBlock {
    std::vector<int> amplitudes;  // 4n positive odd levels
    BigInt index;
};

/// Enumerative sphere shaping codec over 1D amplitudes: a bijection between
/// indices [0, 2^payload_bits) and the lexicographically smallest energy-capped
/// amplitude sequences (ascending level order, index 0 = all-ones block).
class EssCodec1D {
public:
    EssCodec1D(const AmplitudeAlphabet& alphabet, int block_len_1d, long energy_cap)
        : levels_(detail::integer_levels(alphabet)),
          trellis_(detail::level_energies(levels_), std::vector<BigInt>(levels_.size(), BigInt(1)),
                   block_len_1d, energy_cap) {
        if (trellis_.total() == 0) throw std::invalid_argument("EssCodec1D: cap admits no sequence");
        payload_bits_ = static_cast<int>(boost::multiprecision::msb(trellis_.total()));
    }

    /// Codec for a target rate of H bits per positive 1D symbol over blocks of
    /// 4n amplitudes; the cap is the smallest one reaching the rate.
    static EssCodec1D for_rate(int M, int n, double h_bits_per_1d) {
        const int block = 4 * n;
        const int target_bits = static_cast<int>(std::llround(h_bits_per_1d * block));
        return EssCodec1D(make_qam_alphabet(M), block, min_cap_for_rate(M, block, target_bits));
    }

    int block_len() const { return trellis_.length(); }
    long energy_cap() const { return trellis_.cap(); }
    int payload_bits() const { return payload_bits_; }
    const BigInt& sequence_count() const { return trellis_.total(); }
    const std::vector<int>& levels() const { return levels_; }

    ShapedBlock encode(const BigInt& index) const {
        if (index < 0 || index >= (BigInt(1) << payload_bits_))
            throw std::invalid_argument("EssCodec1D::encode: index out of range");
        ShapedBlock blk;
        blk.index = index;
        blk.amplitudes.reserve(block_len());
        BigInt rem = index;
        long e = 0;
        for (int pos = 0; pos < block_len(); ++pos) {
            bool placed = false;
            for (std::size_t k = 0; k < levels_.size(); ++k) {
                const long ne = e + static_cast<long>(levels_[k]) * levels_[k];
                if (ne > energy_cap()) break;
                const BigInt& c = trellis_.completions(pos + 1, ne);
                if (rem < c) {
                    blk.amplitudes.push_back(levels_[k]);
                    e = ne;
                    placed = true;
                    break;
                }
                rem -= c;
            }
            if (!placed) throw std::logic_error("EssCodec1D::encode: trellis walk failed");
        }
        return blk;
    }

    BigInt decode(std::span<const int> amplitudes) const {
        if (static_cast<int>(amplitudes.size()) != block_len())
            throw std::invalid_argument("EssCodec1D::decode: wrong block length");
        BigInt index = 0;
        long e = 0;
        for (int pos = 0; pos < block_len(); ++pos) {
            const auto it = std::find(levels_.begin(), levels_.end(), amplitudes[pos]);
            if (it == levels_.end())
                throw std::invalid_argument("EssCodec1D::decode: amplitude not in alphabet");
            for (auto jt = levels_.begin(); jt != it; ++jt) {
                const long ne = e + static_cast<long>(*jt) * (*jt);
                if (ne > energy_cap()) break;
                index += trellis_.completions(pos + 1, ne);
            }
            e += static_cast<long>(*it) * (*it);
            if (e > energy_cap())
                throw std::invalid_argument("EssCodec1D::decode: sequence violates the energy cap");
        }
        return index;
    }

private:
    std::vector<int> levels_;
    EnergyTrellis trellis_;
    int payload_bits_;
};

/// Inner-outer concatenated shaping: every PDM time slot (4 amplitudes) obeys
/// the inner energy cap, and the block of n slot energies obeys the outer cap.
/// The index maps to (slot-energy sequence, cell choice within each energy
/// group); cells of equal energy are ordered lexicographically.
class EssCodec4D {
public:
    EssCodec4D(int M, int n, long inner_cap, long outer_cap)
        : n_(n), inner_cap_(inner_cap), groups_(build_groups(M, inner_cap)),
          outer_(group_energies(groups_), group_sizes(groups_), n, outer_cap) {
        if (outer_.total() == 0) throw std::invalid_argument("EssCodec4D: caps admit no sequence");
        payload_bits_ = static_cast<int>(boost::multiprecision::msb(outer_.total()));
    }

    /// Picks caps for a target rate of H bits per positive 1D symbol: the
    /// inner cap defaults to the smallest slot-energy cap that keeps the rate
    /// achievable; the outer cap is then the smallest one reaching the rate.
    static EssCodec4D for_rate(int M, int n, double h_bits_per_1d, long inner_cap = 0) {
        const int target_bits = static_cast<int>(std::llround(h_bits_per_1d * 4 * n));
        const BigInt need = BigInt(1) << target_bits;
        if (inner_cap <= 0) {
            const auto all = build_groups(M, 4L * (2 * M - 1) * (2 * M - 1));
            BigInt cells = 0;
            bool found = false;
            for (const auto& g : all) {
                cells += static_cast<long>(g.cells.size());
                if (boost::multiprecision::pow(cells, n) >= need) {
                    inner_cap = g.energy;
                    found = true;
                    break;
                }
            }
            if (!found) throw std::invalid_argument("EssCodec4D: rate infeasible for this (M, n)");
        }
        const auto groups = build_groups(M, inner_cap);
        const long max_outer = static_cast<long>(n) * groups.back().energy;
        const auto hist = detail::energy_histogram(group_energies(groups), group_sizes(groups), n,
                                                   max_outer);
        BigInt cum = 0;
        long outer_cap = -1;
        for (long e = 0; e <= max_outer; ++e) {
            cum += hist[e];
            if (cum >= need) {
                outer_cap = e;
                break;
            }
        }
        if (outer_cap < 0) throw std::invalid_argument("EssCodec4D: rate infeasible at this inner cap");
        return EssCodec4D(M, n, inner_cap, outer_cap);
    }

    int slots_per_block() const { return n_; }
    int block_len() const { return 4 * n_; }
    long inner_cap() const { return inner_cap_; }
    long outer_cap() const { return outer_.cap(); }
    int payload_bits() const { return payload_bits_; }
    const BigInt& sequence_count() const { return outer_.total(); }

    ShapedBlock encode(const BigInt& index) const {
        if (index < 0 || index >= (BigInt(1) << payload_bits_))
            throw std::invalid_argument("EssCodec4D::encode: index out of range");
        ShapedBlock blk;
        blk.index = index;
        blk.amplitudes.reserve(block_len());
        BigInt rem = index;
        long e = 0;
        for (int slot = 0; slot < n_; ++slot) {
            bool placed = false;
            for (const auto& g : groups_) {
                const long ne = e + g.energy;
                if (ne > outer_cap()) break;
                const BigInt& sub = outer_.completions(slot + 1, ne);
                const BigInt weight = BigInt(static_cast<long>(g.cells.size())) * sub;
                if (rem < weight) {
                    const BigInt cell_idx = rem / sub;
                    rem %= sub;
                    const auto& cell = g.cells[static_cast<std::size_t>(cell_idx)];
                    blk.amplitudes.insert(blk.amplitudes.end(), cell.begin(), cell.end());
                    e = ne;
                    placed = true;
                    break;
                }
                rem -= weight;
            }
            if (!placed) throw std::logic_error("EssCodec4D::encode: trellis walk failed");
        }
        return blk;
    }

    BigInt decode(std::span<const int> amplitudes) const {
        if (static_cast<int>(amplitudes.size()) != block_len())
            throw std::invalid_argument("EssCodec4D::decode: wrong block length");
        BigInt index = 0;
        long e = 0;
        for (int slot = 0; slot < n_; ++slot) {
            std::array<int, 4> cell{};
            long slot_energy = 0;
            for (int k = 0; k < 4; ++k) {
                cell[k] = amplitudes[4 * slot + k];
                slot_energy += static_cast<long>(cell[k]) * cell[k];
            }
            if (slot_energy > inner_cap_)
                throw std::invalid_argument("EssCodec4D::decode: slot violates the inner cap");
            const auto git = std::find_if(groups_.begin(), groups_.end(),
                                          [&](const EnergyGroup& g) { return g.energy == slot_energy; });
            if (git == groups_.end())
                throw std::invalid_argument("EssCodec4D::decode: invalid slot content");
            const auto cit = std::lower_bound(git->cells.begin(), git->cells.end(), cell);
            if (cit == git->cells.end() || *cit != cell)
                throw std::invalid_argument("EssCodec4D::decode: amplitude not in alphabet");
            const long ne = e + slot_energy;
            if (ne > outer_cap())
                throw std::invalid_argument("EssCodec4D::decode: sequence violates the outer cap");
            for (auto jt = groups_.begin(); jt != git; ++jt) {
                const long je = e + jt->energy;
                if (je > outer_cap()) break;
                index += BigInt(static_cast<long>(jt->cells.size())) * outer_.completions(slot + 1, je);
            }
            index += BigInt(cit - git->cells.begin()) * outer_.completions(slot + 1, ne);
            e = ne;
        }
        return index;
    }

private:
    struct EnergyGroup {
        long energy;
        std::vector<std::array<int, 4>> cells;  // lexicographically ascending
    };

    static std::vector<EnergyGroup> build_groups(int M, long inner_cap) {
        std::vector<EnergyGroup> groups;
        std::vector<std::array<int, 4>> cells;
        std::array<int, 4> idx{};
        while (true) {
            std::array<int, 4> cell{};
            long e = 0;
            for (int k = 0; k < 4; ++k) {
                cell[k] = 2 * idx[k] + 1;
                e += static_cast<long>(cell[k]) * cell[k];
            }
            if (e <= inner_cap) cells.push_back(cell);
            int pos = 3;
            while (pos >= 0 && ++idx[pos] == M) idx[pos--] = 0;
            if (pos < 0) break;
        }
        if (cells.empty()) throw std::invalid_argument("EssCodec4D: inner cap admits no slot");
        std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
            long ea = 0, eb = 0;
            for (int k = 0; k < 4; ++k) {
                ea += static_cast<long>(a[k]) * a[k];
                eb += static_cast<long>(b[k]) * b[k];
            }
            return ea != eb ? ea < eb : a < b;
        });
        for (const auto& c : cells) {
            long e = 0;
            for (int k = 0; k < 4; ++k) e += static_cast<long>(c[k]) * c[k];
            if (groups.empty() || groups.back().energy != e) groups.push_back({e, {}});
            groups.back().cells.push_back(c);
        }
        return groups;
    }

    static std::vector<long> group_energies(const std::vector<EnergyGroup>& g) {
        std::vector<long> e;
        for (const auto& x : g) e.push_back(x.energy);
        return e;
    }
    static std::vector<BigInt> group_sizes(const std::vector<EnergyGroup>& g) {
        std::vector<BigInt> s;
        for (const auto& x : g) s.push_back(static_cast<long>(x.cells.size()));
        return s;
    }

    int n_;
    long inner_cap_;
    std::vector<EnergyGroup> groups_;
    EnergyTrellis outer_;
    int payload_bits_;
};

namespace detail {

inline BigInt random_payload(int bits, Rng& rng) {
    BigInt v = 0;
    int got = 0;
    while (got < bits) {
        v <<= 64;
        v |= rng.next_u64();
        got += 64;
    }
    v >>= (got - bits);
    return v;
}

/// Maps consecutive amplitude quadruples to PDM slots (I_X, Q_X, I_Y, Q_Y)
/// with independent equiprobable signs, then normalizes to unit mean power.
inline PdmSymbolStream blocks_to_stream(const std::vector<int>& amplitudes, Rng& sign_rng) {
    const std::size_t slots = amplitudes.size() / 4;
    std::vector<cplx> x(slots), y(slots);
    for (std::size_t t = 0; t < slots; ++t) {
        const double xi = sign_rng.sign() * amplitudes[4 * t + 0];
        const double xq = sign_rng.sign() * amplitudes[4 * t + 1];
        const double yi = sign_rng.sign() * amplitudes[4 * t + 2];
        const double yq = sign_rng.sign() * amplitudes[4 * t + 3];
        x[t] = {xi, xq};
        y[t] = {yi, yq};
    }
    return normalize_stream(std::move(x), std::move(y));
}

}  // namespace detail

/// Concatenates `blocks` encoded blocks with uniformly drawn payload indices.
template <class Codec>
PdmSymbolStream shaped_stream(const Codec& codec, std::size_t blocks, std::uint64_t seed) {
    if (blocks < 1) throw std::invalid_argument("shaped_stream: blocks must be >= 1");
    Rng payload_rng = Rng::fork(seed, 0x5a9e);
    Rng sign_rng = Rng::fork(seed, 0x51f5);
    std::vector<int> amplitudes;
    amplitudes.reserve(blocks * codec.block_len());
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto blk = codec.encode(detail::random_payload(codec.payload_bits(), payload_rng));
        amplitudes.insert(amplitudes.end(), blk.amplitudes.begin(), blk.amplitudes.end());
    }
    return detail::blocks_to_stream(amplitudes, sign_rng);
}

/// One-line CSV summary of a codec (count as a decimal string).
inline std::string codec_summary_csv_header() {
    return "M,n,inner_cap,outer_cap,payload_bits,H_bits_per_1d,count";
}

inline std::string codec_summary_csv(int M, int n, long inner_cap, long outer_cap, int payload_bits,
                                     const BigInt& count) {
    const double h = static_cast<double>(payload_bits) / (4.0 * n);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%d,%ld,%ld,%d,%.6g,", M, n, inner_cap, outer_cap,
                  payload_bits, h);
    return std::string(buf) + count.str();
}

}  // namespace fiberlab

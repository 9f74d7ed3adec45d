#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "broyden/pair_store.hpp"

namespace broyden {

struct PairFile {
  PairSequence<double> pairs;
  GramCache<double> gram;
  PhiSchedule<double> schedule;
};

// Text pair file:
//   n m gamma
//   phi <float> | phi sr1      (m times, each followed by)
//   <n floats: s_j>
//   <n floats: y_j>
// Floats are written in shortest round-trip form, so load(save(x)) == x.
void write_pairs(std::ostream& out, const PairSequence<double>& seq,
                 const PhiSchedule<double>& schedule);
PairFile read_pairs(std::istream& in);

void save_pairs(const PairSequence<double>& seq, const PhiSchedule<double>& schedule,
                const std::filesystem::path& path);
PairFile load_pairs(const std::filesystem::path& path);

// Whitespace-separated floats (right-hand sides, solutions).
Vector<double> load_vector(const std::filesystem::path& path);
void save_vector(const Vector<double>& v, const std::filesystem::path& path);

// Schedule file: whitespace-separated tokens, each a float or "sr1".
PhiSchedule<double> load_schedule(const std::filesystem::path& path);

PhiStep<double> parse_phi_token(std::string_view token, std::size_t line);
std::string format_double(double value);

}  // namespace broyden

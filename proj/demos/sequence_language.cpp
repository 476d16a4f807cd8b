// Build a decoupling schedule from sequence-language text, print its
// canonical form and the per-pair dephasing coefficients.
#include <qdeco/schedule.hpp>
#include <qdeco/sequence_dsl.hpp>

#include <cstdio>

int main() {
  const char* program =
      "dim 3\n"
      "dt 0.01\n"
      "param lambda 2\n"
      "param mu 0.5\n"
      "repeat 50 {\n"
      "  sys on dt\n"
      "  sys off (lambda - mu) * dt\n"
      "  gate 1 2\n"
      "  sys off mu * dt\n"
      "  gate 1 2\n"
      "}\n";

  auto schedule = qdeco::dsl::parse_sequence(program);
  std::printf("canonical form:\n%s\n",
              qdeco::dsl::emit_sequence(schedule).c_str());

  auto pc = qdeco::pair_coefficients(schedule);
  std::printf("pair dephasing coefficients:\n");
  for (int i = 0; i < pc.dim; ++i)
    for (int j = i + 1; j < pc.dim; ++j)
      std::printf("  c_%d%d = %+.3f\n", i + 1, j + 1, pc.at(i, j));
  return 0;
}

#include "topomesh/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "topomesh/error.hpp"

namespace topomesh {

namespace {

constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ofstream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* data, std::size_t n, const std::string& path) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n))
    throw ValidationError("truncated checkpoint: " + path);
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
  write_bytes(out, &v, sizeof v);
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T v{};
  read_bytes(in, &v, sizeof v, path);
  return v;
}

template <typename Vec>
void write_array(std::ofstream& out, const std::vector<Vec>& v, int dims) {
  for (const Vec& e : v) write_bytes(out, e.data(), sizeof(double) * static_cast<std::size_t>(dims));
}

template <typename Vec>
void read_array(std::ifstream& in, std::vector<Vec>& v, int dims, const std::string& path) {
  for (Vec& e : v) read_bytes(in, e.data(), sizeof(double) * static_cast<std::size_t>(dims), path);
}

}  // namespace

void save_checkpoint(const std::string& path, const GaussianMesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  write_bytes(out, "TPGM", 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::int64_t>(mesh.frame_index));
  write_pod(out, static_cast<std::uint64_t>(mesh.size()));
  write_array(out, mesh.positions, 3);
  write_array(out, mesh.rotations, 4);
  write_array(out, mesh.scales, 3);
  write_array(out, mesh.colors, 3);
  for (double o : mesh.opacities) write_pod(out, o);
  if (!out) throw Error("failed while writing checkpoint: " + path);
}

GaussianMesh load_checkpoint(const std::string& path, std::shared_ptr<const Topology> topology) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  char magic[4];
  read_bytes(in, magic, 4, path);
  if (std::memcmp(magic, "TPGM", 4) != 0)
    throw ValidationError("not a gaussian-mesh checkpoint: " + path);
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion)
    throw ValidationError("unsupported checkpoint version in " + path);
  GaussianMesh mesh;
  mesh.topology = std::move(topology);
  mesh.frame_index = static_cast<int>(read_pod<std::int64_t>(in, path));
  const auto n = read_pod<std::uint64_t>(in, path);
  if (mesh.topology && static_cast<std::uint64_t>(mesh.topology->n_v) != n)
    throw ValidationError("checkpoint vertex count does not match the topology: " + path);
  mesh.positions.resize(n);
  mesh.rotations.resize(n);
  mesh.scales.resize(n);
  mesh.colors.resize(n);
  mesh.opacities.resize(n);
  read_array(in, mesh.positions, 3, path);
  read_array(in, mesh.rotations, 4, path);
  read_array(in, mesh.scales, 3, path);
  read_array(in, mesh.colors, 3, path);
  for (double& o : mesh.opacities) o = read_pod<double>(in, path);
  return mesh;
}

void save_dense_checkpoint(const std::string& path, const DenseGaussianMesh& dense) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dense checkpoint: " + path);
  write_bytes(out, "TPGD", 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::int32_t>(dense.n));
  write_pod(out, static_cast<std::uint64_t>(dense.size()));
  write_array(out, dense.colors, 3);
  write_array(out, dense.rotations, 4);
  if (!out) throw Error("failed while writing dense checkpoint: " + path);
}

void load_dense_checkpoint(const std::string& path, DenseGaussianMesh& dense) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dense checkpoint: " + path);
  char magic[4];
  read_bytes(in, magic, 4, path);
  if (std::memcmp(magic, "TPGD", 4) != 0)
    throw ValidationError("not a dense checkpoint: " + path);
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion) throw ValidationError("unsupported dense checkpoint version in " + path);
  const auto n_lattice = read_pod<std::int32_t>(in, path);
  const auto count = read_pod<std::uint64_t>(in, path);
  if (n_lattice != dense.n || count != static_cast<std::uint64_t>(dense.size()))
    throw ValidationError("dense checkpoint does not match the densified mesh: " + path);
  read_array(in, dense.colors, 3, path);
  read_array(in, dense.rotations, 4, path);
}

}  // namespace topomesh

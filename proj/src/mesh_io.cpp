#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lyapcert/cli.hpp"
#include "lyapcert/hypersurface.hpp"

namespace lyapcert {

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_mesh(std::ostream& out, const Hypersurface& H) {
  const int n = H.dimension();
  out << "dim " << n << " level " << g17(H.level()) << "\n";
  for (std::size_t i = 0; i < H.vertices().size(); ++i) {
    out << "v";
    for (int a = 0; a < n; ++a) out << " " << g17(H.vertices()[i][a]);
    for (int a = 0; a < n; ++a) out << " " << g17(H.normals()[i][a]);
    out << "\n";
  }
  for (const auto& e : H.edges()) out << "e " << e[0] << " " << e[1] << "\n";
  for (const auto& t : H.triangles()) out << "f " << t[0] << " " << t[1] << " " << t[2] << "\n";
}

MeshData read_mesh(std::istream& in) {
  MeshData mesh;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error("mesh line " + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line)) throw Error("mesh is empty");
  ++line_no;
  {
    std::istringstream header(line);
    std::string dim_tag, level_tag;
    if (!(header >> dim_tag >> mesh.dimension >> level_tag >> mesh.level) || dim_tag != "dim" ||
        level_tag != "level" || (mesh.dimension != 2 && mesh.dimension != 3)) {
      fail("expected 'dim n level a'");
    }
  }
  const int n = mesh.dimension;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream s(line);
    std::string tag;
    s >> tag;
    if (tag == "v") {
      Vec p, q;
      for (int a = 0; a < n; ++a) s >> p[a];
      for (int a = 0; a < n; ++a) s >> q[a];
      if (!s) fail("bad vertex");
      mesh.vertices.push_back(p);
      mesh.normals.push_back(q);
    } else if (tag == "e" && n == 2) {
      std::array<int, 2> e{};
      if (!(s >> e[0] >> e[1])) fail("bad edge");
      mesh.edges.push_back(e);
    } else if (tag == "f" && n == 3) {
      std::array<int, 3> t{};
      if (!(s >> t[0] >> t[1] >> t[2])) fail("bad face");
      mesh.triangles.push_back(t);
    } else {
      fail("unexpected record '" + tag + "'");
    }
  }
  const int nv = static_cast<int>(mesh.vertices.size());
  auto check = [&](int i) {
    if (i < 0 || i >= nv) throw Error("mesh references vertex " + std::to_string(i) + " out of range");
  };
  for (const auto& e : mesh.edges) check(e[0]), check(e[1]);
  for (const auto& t : mesh.triangles) check(t[0]), check(t[1]), check(t[2]);
  return mesh;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace lyapcert

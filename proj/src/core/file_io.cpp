#include "file_io.hpp"

#include "errors.hpp"

#include <fstream>
#include <sstream>

namespace thumbtrak {

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad())
    throw Error(ErrorKind::Io, "error while reading '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const std::filesystem::path &path, const std::string &contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << contents;
  out.flush();
  if (!out)
    throw Error(ErrorKind::Io, "error while writing '" + path.string() + "'");
}

} // namespace thumbtrak

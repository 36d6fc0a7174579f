#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "avail/trace.hpp"

namespace avail {

/// Reads a session log in CSV form: header `user_id,start_unix,end_unix`,
/// then one record per line with integer UTC seconds. Malformed lines and
/// records with start >= end are skipped and counted in `stats` with their
/// line number. An empty file yields an empty session list.
std::vector<Session> read_session_csv(std::istream& in, IngestStats* stats = nullptr);
std::vector<Session> read_session_csv_file(const std::string& path, IngestStats* stats = nullptr);

/// TraceMatrix artifact, format "AVTM" version 1 (little-endian):
///
///   bytes 0..3   magic "AVTM"
///   u32          version (1)
///   i64          epoch            (unix seconds)
///   i32          slot_seconds
///   i32          utc_offset      (seconds)
///   i64          first_slot
///   i64          last_slot       (exclusive)
///   u64          n_users
///   per user     u32 length + UTF-8 bytes of the user id
///   cells        n_users * (last_slot - first_slot) f64, row-major
///
/// Round-trips bit-exactly: cells are stored as raw IEEE-754 doubles.
void write_matrix(const TraceMatrix& matrix, std::ostream& out);
void write_matrix_file(const TraceMatrix& matrix, const std::string& path);
TraceMatrix read_matrix(std::istream& in);
TraceMatrix read_matrix_file(const std::string& path);

} // namespace avail

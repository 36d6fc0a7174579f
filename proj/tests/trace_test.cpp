#include "avail/trace.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "avail/errors.hpp"
#include "avail/rng.hpp"
#include "avail/trace_io.hpp"
#include "support.hpp"

namespace avail {
namespace {

using avail_test::TempDir;
using avail_test::make_matrix;

TEST(FloorArithmetic, MatchesMathematicalDefinition) {
	EXPECT_EQ(floor_div(7, 3), 2);
	EXPECT_EQ(floor_div(-7, 3), -3);
	EXPECT_EQ(floor_div(-6, 3), -2);
	EXPECT_EQ(floor_mod(7, 3), 1);
	EXPECT_EQ(floor_mod(-7, 3), 2);
	EXPECT_EQ(floor_mod(-6, 3), 0);
	// Identity n = floor_div(n, d) * d + floor_mod(n, d) over a sweep.
	for (std::int64_t n = -25; n <= 25; ++n)
		for (std::int64_t d : {1, 2, 3, 7, 24})
			EXPECT_EQ(n, floor_div(n, d) * d + floor_mod(n, d)) << n << " / " << d;
}

TEST(WeekdayOfTime, AgreesWithKnownCalendarDates) {
	// Monday = 0 .. Sunday = 6.
	EXPECT_EQ(weekday_of_time(0), 3);               // 1970-01-01 was a Thursday
	EXPECT_EQ(weekday_of_time(86399), 3);           // still Thursday one second before midnight
	EXPECT_EQ(weekday_of_time(86400), 4);           // 1970-01-02, Friday
	EXPECT_EQ(weekday_of_time(-1), 2);              // 1969-12-31, Wednesday
	EXPECT_EQ(weekday_of_time(345600), 0);          // 1970-01-05, Monday
	EXPECT_EQ(weekday_of_time(946684800), 5);       // 2000-01-01, Saturday
	EXPECT_EQ(weekday_of_time(1709164800), 3);      // 2024-02-29, Thursday
}

TEST(SlotSpec, DefaultGridStartsOnAMondayMidnight) {
	SlotSpec spec;
	EXPECT_EQ(spec.epoch, kDefaultEpoch);
	EXPECT_EQ(weekday_of_time(spec.epoch), 0);
	EXPECT_EQ(spec.slots_per_day(), 24);
	EXPECT_EQ(spec.slots_per_week(), 168);
	EXPECT_TRUE(spec.day_aligned());
	spec.validate();
}

TEST(SlotSpec, CalendarMappingMatchesIndependentArithmetic) {
	SlotSpec spec;
	for (std::int64_t slot = -200; slot < 600; ++slot) {
		const std::int64_t t = spec.epoch + slot * spec.slot_seconds;
		EXPECT_EQ(spec.time_of_slot(slot), t);
		EXPECT_EQ(spec.slot_of_time(t), slot);
		EXPECT_EQ(spec.slot_of_time(t + spec.slot_seconds - 1), slot);
		// Independent recomputation straight from the unix time.
		EXPECT_EQ(spec.day_of_week(slot), weekday_of_time(t));
		EXPECT_EQ(spec.second_of_day(slot), floor_mod(t, kSecondsPerDay));
		EXPECT_EQ(spec.is_weekend(slot), weekday_of_time(t) >= 5);
		EXPECT_EQ(spec.week_column(slot), floor_mod(slot, 168));
	}
}

TEST(SlotSpec, UtcOffsetShiftsTheGridAnchor) {
	// A UTC+3 trace anchors its grid three hours earlier in UTC so that
	// slot 0 still starts at Monday 00:00 on the local wall clock.
	SlotSpec spec;
	spec.utc_offset = 3 * 3600;
	EXPECT_THROW(spec.validate(), ValidationError); // default epoch is Monday 03:00 local
	spec.epoch = kDefaultEpoch - spec.utc_offset;
	spec.validate();
	for (std::int64_t slot = -10; slot < 400; ++slot) {
		const std::int64_t wall = spec.epoch + slot * spec.slot_seconds + spec.utc_offset;
		EXPECT_EQ(spec.day_of_week(slot), weekday_of_time(wall));
		EXPECT_EQ(spec.second_of_day(slot), floor_mod(wall, kSecondsPerDay));
	}
	// The same unix instant lands in different slots on the two grids.
	SlotSpec utc;
	EXPECT_EQ(utc.slot_of_time(kDefaultEpoch), 0);
	EXPECT_EQ(spec.slot_of_time(kDefaultEpoch), 3);
}

TEST(SlotSpec, ValidationRejectsBrokenSpecs) {
	SlotSpec bad;
	bad.slot_seconds = 0;
	EXPECT_THROW(bad.validate(), ValidationError);
	bad.slot_seconds = -3600;
	EXPECT_THROW(bad.validate(), ValidationError);
	SlotSpec weird;
	weird.slot_seconds = 7000; // does not divide a week
	EXPECT_THROW(weird.validate(), ValidationError);
}

TEST(SlotSpec, DaysBetweenIsExactForWholeDays) {
	SlotSpec spec;
	EXPECT_DOUBLE_EQ(spec.days_between(0, 24), 1.0);
	EXPECT_DOUBLE_EQ(spec.days_between(0, 36), 1.5);
	EXPECT_DOUBLE_EQ(spec.days_between(48, 0), -2.0);
}

/// Second-granularity brute force: marks every online second of a user on a
/// small horizon and rebuilds each cell as covered/3600. The production
/// slotter must agree exactly, whatever interval unions it performs.
TEST(IngestSessions, MatchesSecondGranularityOracle) {
	SlotSpec spec;
	Rng rng(99);
	const std::int64_t horizon = 3 * kSecondsPerDay;
	std::vector<Session> sessions;
	for (int i = 0; i < 40; ++i) {
		Session s;
		s.user_id = "only";
		s.start = spec.epoch + static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(horizon)));
		s.end = s.start + 1 + static_cast<std::int64_t>(rng.next_below(8 * 3600));
		sessions.push_back(s);
	}

	std::vector<char> online(static_cast<std::size_t>(horizon + 9 * 3600), 0);
	for (const Session& s : sessions)
		for (std::int64_t t = s.start; t < s.end; ++t)
			online[static_cast<std::size_t>(t - spec.epoch)] = 1;

	TraceMatrix matrix = ingest_sessions(sessions, spec);
	ASSERT_EQ(matrix.n_users(), 1);
	for (std::int64_t slot = matrix.slot_range().first; slot < matrix.slot_range().last; ++slot) {
		std::int64_t covered = 0;
		for (std::int32_t sec = 0; sec < spec.slot_seconds; ++sec) {
			const std::int64_t t = slot * spec.slot_seconds + sec;
			if (t < static_cast<std::int64_t>(online.size()) && online[static_cast<std::size_t>(t)])
				++covered;
		}
		EXPECT_EQ(matrix.cell(0, slot), static_cast<double>(covered) / spec.slot_seconds) << "slot " << slot;
	}
}

TEST(IngestSessions, OverlappingSessionsNeverExceedFullSlots) {
	SlotSpec spec;
	std::vector<Session> sessions = {
			{"a", spec.epoch, spec.epoch + 7200},
			{"a", spec.epoch + 100, spec.epoch + 7000},   // nested
			{"a", spec.epoch + 3600, spec.epoch + 10800}, // overlapping tail
	};
	TraceMatrix matrix = ingest_sessions(sessions, spec);
	ASSERT_EQ(matrix.n_users(), 1);
	EXPECT_DOUBLE_EQ(matrix.cell(0, 0), 1.0);
	EXPECT_DOUBLE_EQ(matrix.cell(0, 1), 1.0);
	EXPECT_DOUBLE_EQ(matrix.cell(0, 2), 1.0);
	for (std::int64_t s = matrix.slot_range().first; s < matrix.slot_range().last; ++s)
		EXPECT_LE(matrix.cell(0, s), 1.0);
}

TEST(IngestSessions, SkipsAndCountsBadRecords) {
	SlotSpec spec;
	std::vector<Session> sessions = {
			{"a", spec.epoch + 10, spec.epoch + 10},  // empty
			{"a", spec.epoch + 20, spec.epoch + 10},  // reversed
			{"a", spec.epoch - 50, spec.epoch + 10},  // before the epoch
			{"a", spec.epoch + 30, spec.epoch + 90},  // good
	};
	IngestStats stats;
	TraceMatrix matrix = ingest_sessions(sessions, spec, &stats);
	EXPECT_EQ(stats.records_total, 4u);
	EXPECT_EQ(stats.records_skipped, 3u);
	EXPECT_EQ(stats.issues.size(), 3u);
	ASSERT_EQ(matrix.n_users(), 1);
	EXPECT_DOUBLE_EQ(matrix.cell(0, 0), 60.0 / 3600.0);
}

TEST(IngestSessions, EmptyInputYieldsEmptyMatrix) {
	SlotSpec spec;
	TraceMatrix matrix = ingest_sessions({}, spec);
	EXPECT_TRUE(matrix.empty());
	EXPECT_EQ(matrix.n_users(), 0);
}

TEST(ReadSessionCsv, ParsesSkipsAndCounts) {
	std::istringstream in(
			"user_id,start_unix,end_unix\n"
			"alice,1000,2000\n"
			"bob,not_a_number,2000\n"
			"carol,3000\n"
			"dave,5000,4000\n"
			"\n"
			"erin,7000,8000\n");
	IngestStats stats;
	std::vector<Session> sessions = read_session_csv(in, &stats);
	ASSERT_EQ(sessions.size(), 2u);
	EXPECT_EQ(sessions[0].user_id, "alice");
	EXPECT_EQ(sessions[1].user_id, "erin");
	EXPECT_EQ(stats.records_total, 5u);
	EXPECT_EQ(stats.records_skipped, 3u);
	// Issues carry the source line numbers.
	ASSERT_EQ(stats.issues.size(), 3u);
	EXPECT_NE(stats.issues[0].find("line 3"), std::string::npos);
	EXPECT_NE(stats.issues[1].find("line 4"), std::string::npos);
	EXPECT_NE(stats.issues[2].find("line 5"), std::string::npos);
}

TEST(ReadSessionCsv, HeaderIsOptional) {
	std::istringstream with_header("user_id,start_unix,end_unix\nx,10,20\n");
	std::istringstream without_header("x,10,20\n");
	EXPECT_EQ(read_session_csv(with_header).size(), 1u);
	EXPECT_EQ(read_session_csv(without_header).size(), 1u);
}

TEST(ReadSessionCsv, EmptyFileIsEmptyNotAnError) {
	std::istringstream in("");
	IngestStats stats;
	EXPECT_TRUE(read_session_csv(in, &stats).empty());
	EXPECT_EQ(stats.records_total, 0u);
}

TEST(Availability, HandComputedWindowStatistics) {
	TraceMatrix matrix = make_matrix(3, {0, 4}, [](std::int32_t u, std::int64_t s) {
		if (u == 0)
			return s == 0 ? 1.0 : (s == 1 ? 0.5 : 0.0);
		if (u == 1)
			return 0.0;
		return 1.0;
	});
	AvailabilitySummary summary = availability(matrix, {0, 4});
	ASSERT_EQ(summary.rows.size(), 3u);
	EXPECT_DOUBLE_EQ(summary.availability[0], 1.5 / 4.0);
	EXPECT_DOUBLE_EQ(summary.availability[1], 0.0);
	EXPECT_DOUBLE_EQ(summary.availability[2], 1.0);
	EXPECT_EQ(summary.last_seen[0], 1);
	EXPECT_EQ(summary.last_seen[1], AvailabilitySummary::kNeverSeen);
	EXPECT_EQ(summary.last_seen[2], 3);
	EXPECT_DOUBLE_EQ(summary.mean_availability, (1.5 / 4.0 + 0.0 + 1.0) / 3.0);
	EXPECT_DOUBLE_EQ(summary.availability_of(2), 1.0);
	EXPECT_EQ(summary.last_seen_of(1), AvailabilitySummary::kNeverSeen);
}

TEST(Availability, WindowRestrictsTheStatistics) {
	TraceMatrix matrix = make_matrix(1, {0, 6}, [](std::int32_t, std::int64_t s) {
		return s < 3 ? 1.0 : 0.0;
	});
	AvailabilitySummary early = availability(matrix, {0, 3});
	AvailabilitySummary late = availability(matrix, {3, 6});
	EXPECT_DOUBLE_EQ(early.availability[0], 1.0);
	EXPECT_DOUBLE_EQ(late.availability[0], 0.0);
	EXPECT_EQ(late.last_seen[0], AvailabilitySummary::kNeverSeen);
}

TEST(FilterHighAvailability, RetentionIsStrictlyGreater) {
	TraceMatrix matrix = make_matrix(3, {0, 100}, [](std::int32_t u, std::int64_t s) {
		// availabilities: exactly 0.17, just above, well below
		if (u == 0)
			return s < 17 ? 1.0 : 0.0;
		if (u == 1)
			return s < 18 ? 1.0 : 0.0;
		return s < 5 ? 1.0 : 0.0;
	});
	AvailabilitySummary summary = availability(matrix, {0, 100});
	std::vector<std::int32_t> kept = filter_high_availability(summary, 0.17);
	ASSERT_EQ(kept.size(), 1u);
	EXPECT_EQ(kept[0], 1); // the boundary user is dropped with the low one
}

TEST(TraceMatrix, RowLookupAndEquality) {
	TraceMatrix matrix = make_matrix(2, {0, 2}, [](std::int32_t u, std::int64_t) { return u * 0.5; });
	EXPECT_EQ(matrix.row_of("u0"), 0);
	EXPECT_EQ(matrix.row_of("u1"), 1);
	EXPECT_EQ(matrix.row_of("nobody"), -1);
	TraceMatrix same = make_matrix(2, {0, 2}, [](std::int32_t u, std::int64_t) { return u * 0.5; });
	EXPECT_TRUE(matrix == same);
}

TEST(MatrixArtifact, RoundTripsBitExactly) {
	Rng rng(5);
	TraceMatrix matrix = make_matrix(7, {-3, 45}, [&](std::int32_t, std::int64_t) {
		return rng.next_double();
	});
	TempDir dir;
	const std::string path = dir.file("m.avtm");
	write_matrix_file(matrix, path);
	TraceMatrix back = read_matrix_file(path);
	EXPECT_TRUE(matrix == back);

	// A second write of the same matrix is byte-identical.
	const std::string path2 = dir.file("m2.avtm");
	write_matrix_file(matrix, path2);
	EXPECT_EQ(avail_test::slurp(path), avail_test::slurp(path2));
}

TEST(MatrixArtifact, RoundTripsEmptyAndUnicodeUsers) {
	SlotSpec spec;
	TraceMatrix empty(spec, {}, {0, 0});
	TempDir dir;
	write_matrix_file(empty, dir.file("empty.avtm"));
	EXPECT_TRUE(read_matrix_file(dir.file("empty.avtm")) == empty);

	TraceMatrix one(spec, {std::string("用户-1")}, {2, 5});
	one.set_cell(0, 3, 0.25);
	write_matrix_file(one, dir.file("one.avtm"));
	TraceMatrix back = read_matrix_file(dir.file("one.avtm"));
	EXPECT_TRUE(back == one);
	EXPECT_EQ(back.row_of("用户-1"), 0);
}

TEST(MatrixArtifact, RejectsForeignBytes) {
	TempDir dir;
	const std::string path = dir.file("junk.avtm");
	{
		std::ofstream out(path, std::ios::binary);
		out << "definitely not a matrix";
	}
	EXPECT_THROW(read_matrix_file(path), ParseError);
	EXPECT_THROW(read_matrix_file(dir.file("missing.avtm")), ParseError);
}

} // namespace
} // namespace avail

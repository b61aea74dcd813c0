#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "hitskt/ingest.hpp"
#include "hitskt/segmentation.hpp"

namespace hitskt {

// On-disk containers. Both start with the magic "HTSK" and a u16 format
// version; all integers and floats are little-endian.
//
// Version 1 (ingested corpus): record count u64, then fixed-width 33-byte
// records (student u32, question u32, skill u32, start i64, end i64,
// answer u8, occurrence u32), then the label tables and drop counters.
//
// Version 2 (segmented corpus): session gap, sequence lengths, then per
// student the session-grouped records, then the same label tables and
// counters.
inline constexpr char kContainerMagic[4] = {'H', 'T', 'S', 'K'};
inline constexpr uint16_t kIngestVersion = 1;
inline constexpr uint16_t kSegmentedVersion = 2;

void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

void write_segmented(const SegmentedDataset& sd, const std::string& path);
SegmentedDataset read_segmented(const std::string& path);

// Little-endian stream primitives shared with the checkpoint codec.
namespace io {
void put_u8(std::ostream& os, uint8_t v);
void put_u16(std::ostream& os, uint16_t v);
void put_u32(std::ostream& os, uint32_t v);
void put_u64(std::ostream& os, uint64_t v);
void put_i64(std::ostream& os, int64_t v);
void put_f64(std::ostream& os, double v);
void put_str(std::ostream& os, const std::string& s);  // u32 length prefix

uint8_t get_u8(std::istream& is);
uint16_t get_u16(std::istream& is);
uint32_t get_u32(std::istream& is);
uint64_t get_u64(std::istream& is);
int64_t get_i64(std::istream& is);
double get_f64(std::istream& is);
std::string get_str(std::istream& is);

// Writes through a temp file and renames, so readers never see partial
// output.
void atomic_write(const std::string& path, const std::string& bytes);
}  // namespace io

}  // namespace hitskt

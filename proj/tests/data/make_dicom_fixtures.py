"""Writes the DICOM test fixtures with pydicom, an independent reference writer.

Run from this directory: python3 make_dicom_fixtures.py
The outputs are checked in; the C++ tests never invoke Python.
"""

import struct

import numpy as np
from pydicom.dataset import Dataset, FileMetaDataset
from pydicom.uid import ExplicitVRLittleEndian, ExplicitVRBigEndian, UID

SECONDARY_CAPTURE = UID("1.2.840.10008.5.1.4.1.1.7")


def make(rows, cols, pixels, bits=16, signed=False, photometric="MONOCHROME2", syntax=ExplicitVRLittleEndian):
    meta = FileMetaDataset()
    meta.MediaStorageSOPClassUID = SECONDARY_CAPTURE
    meta.MediaStorageSOPInstanceUID = UID("1.2.826.0.1.3680043.8.498.1")
    meta.TransferSyntaxUID = syntax
    meta.ImplementationClassUID = UID("1.2.826.0.1.3680043.8.498.2")
    ds = Dataset()
    ds.file_meta = meta
    ds.SOPClassUID = SECONDARY_CAPTURE
    ds.SOPInstanceUID = meta.MediaStorageSOPInstanceUID
    ds.Modality = "MR"
    ds.SeriesDescription = "TrueFISP fixture"
    # An undefined-length sequence before the pixel module exercises sequence skipping.
    item = Dataset()
    item.CodeValue = "T-44000"
    item.CodingSchemeDesignator = "SRT"
    item.is_undefined_length_sequence_item = True
    ds.AnatomicRegionSequence = [item]
    ds["AnatomicRegionSequence"].is_undefined_length = True
    ds.Rows = rows
    ds.Columns = cols
    ds.SamplesPerPixel = 1
    ds.PhotometricInterpretation = photometric
    ds.BitsAllocated = bits
    ds.BitsStored = bits
    ds.HighBit = bits - 1
    ds.PixelRepresentation = 1 if signed else 0
    dtype = {(8, False): "<u1", (16, False): "<u2", (16, True): "<i2"}[(bits, signed)]
    if syntax == ExplicitVRBigEndian:
        dtype = dtype.replace("<", ">")
    ds.PixelData = np.asarray(pixels, dtype=dtype).reshape(rows, cols).tobytes()
    return ds


def save(ds, name, little_endian=True):
    ds.save_as(name, enforce_file_format=True, little_endian=little_endian, implicit_vr=False)


save(make(2, 2, [0, 100, 200, 300]), "dicom/tiny_2x2_u16.dcm")
save(make(2, 3, [0, 51, 102, 153, 204, 255], bits=8), "dicom/tiny_2x3_u8.dcm")
save(make(2, 2, [-100, 0, 100, 200], signed=True), "dicom/tiny_2x2_s16.dcm")
save(make(2, 2, [0, 100, 200, 300], photometric="MONOCHROME1"), "dicom/tiny_2x2_mono1.dcm")
save(make(8, 8, [1234] * 64), "dicom/constant_8x8.dcm")
save(make(2, 2, [0, 100, 200, 300], syntax=ExplicitVRBigEndian), "dicom/big_endian.dcm", little_endian=False)

truncated = make(2, 2, [0, 100, 200, 300])
truncated.PixelData = truncated.PixelData[:6]
save(truncated, "dicom/short_pixel_data.dcm")

no_pixels = make(2, 2, [0, 100, 200, 300])
del no_pixels.PixelData
save(no_pixels, "dicom/no_pixel_data.dcm")

# 256x256 16-bit slice with a deterministic pattern, plus the same grid as PGM-16.
y, x = np.mgrid[0:256, 0:256]
grid = ((x * 131 + y * 257 + (x * y) % 977) % 4096).astype(np.uint16)
save(make(256, 256, grid.ravel()), "dicom/slice_256.dcm")
with open("dicom/slice_256.pgm", "wb") as f:
    f.write(b"P5\n256 256\n65535\n")
    f.write(grid.astype(">u2").tobytes())

with open("dicom/not_dicom.dcm", "wb") as f:
    f.write(b"\0" * 128 + b"NOPE" + struct.pack("<I", 0))

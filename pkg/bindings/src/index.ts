/**
 * Array-in/array-out bridge to the realitygen CLI.
 *
 * Points travel as flat float32 arrays (n * k values, k = 4 for
 * x,y,z,intensity records or 5 with a ring index); range images come back
 * as channel-major float32 blocks plus an int32 pixel-to-point grid.
 * Every call shells out to the `realitygen` executable and exchanges data
 * through its documented binary formats, so results are value-identical
 * to the primary implementation. No file handling leaks to the caller.
 */

import { spawnSync } from 'child_process';
import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

const CLI = process.env.REALITYGEN_BIN ?? 'realitygen';

export type WeatherKind = 'rain' | 'snow';

export interface AugmentOptions {
  noiseFloor?: number;
  beamDivergence?: number;
  alphaOverride?: number;
  rMin?: number;
  keepUnprojected?: boolean;
}

export interface RangeImageBlock {
  /** channel-major float32 planes: channels * height * width values */
  block: Float32Array;
  /** height * width point indices, -1 where the pixel is empty */
  indices: Int32Array;
  channels: number;
  height: number;
  width: number;
}

/** Grid shapes of the named sensor profiles the CLI ships. */
const PROFILE_SHAPES: Record<string, { height: number; width: number }> = {
  hdl64: { height: 64, width: 1048 },
  nuscenes32: { height: 32, width: 1048 },
};

const DUMP_CHANNELS = 5; // range, incidence, reflectance, intensity, mask

function formatFor(k: number): string {
  if (k === 4) return 'kitti4';
  if (k === 5) return 'nuscenes5';
  throw new Error(`points must have 4 or 5 values per record, got ${k}`);
}

function checkPoints(points: Float32Array, k: number): number {
  formatFor(k); // k must be 4 or 5 before anything else
  if (points.length % k !== 0) {
    throw new Error(
      `flat array length ${points.length} is not a multiple of k=${k}`,
    );
  }
  for (let i = 0; i < points.length; i++) {
    if (!Number.isFinite(points[i])) {
      throw new Error(`non-finite value at flat index ${i}`);
    }
  }
  return points.length / k;
}

function pointsToBuffer(points: Float32Array): Buffer {
  // the wire format is little-endian float32; typed arrays already are on
  // every platform node ships for
  return Buffer.from(points.buffer, points.byteOffset, points.byteLength);
}

function bufferToFloat32(buf: Buffer): Float32Array {
  const copy = Buffer.from(buf); // own the bytes, aligned
  return new Float32Array(copy.buffer, copy.byteOffset, copy.byteLength / 4);
}

function runCli(args: string[]): string {
  const result = spawnSync(CLI, args, { encoding: 'utf-8' });
  if (result.error) {
    throw new Error(`failed to launch ${CLI}: ${result.error.message}`);
  }
  if (result.status !== 0) {
    throw new Error(
      `${CLI} ${args[0]} exited with ${result.status}: ${result.stderr.trim()}`,
    );
  }
  return result.stdout;
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'realitygen-bind-'));
  try {
    return fn(dir);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}

/**
 * Weather-distort a sweep held in a flat n*k float32 array.
 *
 * Runs the single-frame pipeline path (project, incidence, distort,
 * write-back); the result holds the kept and relocated points, so its
 * row count is at most n. Same inputs and seed give bit-identical output.
 */
export function augment_array(
  points: Float32Array,
  k: 4 | 5,
  weather: WeatherKind,
  rateMmH: number,
  seed: number,
  profile: string = 'hdl64',
  options: AugmentOptions = {},
): Float32Array {
  const n = checkPoints(points, k);
  if (n === 0) return new Float32Array(0);

  return withTempDir((dir) => {
    const inPath = path.join(dir, 'in.bin');
    const outPath = path.join(dir, 'out.bin');
    fs.writeFileSync(inPath, pointsToBuffer(points));

    const args = [
      'augment',
      '--in', inPath,
      '--out', outPath,
      '--weather', weather,
      '--rate', String(rateMmH),
      '--seed', String(seed),
      '--profile', profile,
      '--format', formatFor(k),
    ];
    if (options.noiseFloor !== undefined) {
      args.push('--noise-floor', String(options.noiseFloor));
    }
    if (options.beamDivergence !== undefined) {
      args.push('--beam-divergence', String(options.beamDivergence));
    }
    if (options.alphaOverride !== undefined) {
      args.push('--alpha', String(options.alphaOverride));
    }
    if (options.rMin !== undefined) {
      args.push('--r-min', String(options.rMin));
    }
    if (options.keepUnprojected) {
      args.push('--keep-unprojected');
    }
    runCli(args);
    return bufferToFloat32(fs.readFileSync(outPath));
  });
}

/**
 * Project a sweep onto its profile's spherical grid.
 *
 * Returns the five-channel block (range, incidence when requested,
 * reflectance, intensity, mask) and the pixel-to-point index grid,
 * bit-identical to the primary implementation's dump format.
 */
export function project_array(
  points: Float32Array,
  k: 4 | 5,
  profile: string = 'hdl64',
  withIncidence: boolean = false,
): RangeImageBlock {
  const n = checkPoints(points, k);
  const shape = PROFILE_SHAPES[profile];
  if (!shape) {
    throw new Error(
      `unknown profile ${profile}; known: ${Object.keys(PROFILE_SHAPES).join(', ')}`,
    );
  }
  if (n === 0) {
    const { height, width } = shape;
    return {
      block: new Float32Array(DUMP_CHANNELS * height * width),
      indices: new Int32Array(height * width).fill(-1),
      channels: DUMP_CHANNELS,
      height,
      width,
    };
  }

  return withTempDir((dir) => {
    const inPath = path.join(dir, 'in.bin');
    const dumpPath = path.join(dir, 'out.rimg');
    const idxPath = path.join(dir, 'out.idx');
    fs.writeFileSync(inPath, pointsToBuffer(points));

    const args = [
      'project',
      '--in', inPath,
      '--out', dumpPath,
      '--indices', idxPath,
      '--profile', profile,
      '--format', formatFor(k),
    ];
    if (withIncidence) args.push('--incidence');
    runCli(args);

    const dump = fs.readFileSync(dumpPath);
    const height = dump.readUInt32LE(0);
    const width = dump.readUInt32LE(4);
    const channels = dump.readUInt32LE(8);
    const block = bufferToFloat32(dump.subarray(12));
    if (block.length !== channels * height * width) {
      throw new Error('dump payload does not match its header');
    }
    const idxBuf = Buffer.from(fs.readFileSync(idxPath));
    const indices = new Int32Array(
      idxBuf.buffer, idxBuf.byteOffset, idxBuf.byteLength / 4,
    );
    return { block, indices: indices.slice(), channels, height, width };
  });
}

/** Version string of the underlying executable. */
export function version(): string {
  return runCli(['--version']).trim();
}

// idiomatic aliases
export const augmentArray = augment_array;
export const projectArray = project_array;

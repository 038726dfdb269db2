import { spawnSync } from 'child_process';
import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import { afterAll, describe, expect, it } from 'vitest';

import {
  augment_array,
  project_array,
  version,
} from '../src/index';

const CLI = process.env.REALITYGEN_BIN ?? 'realitygen';

/** Deterministic 32-bit PRNG so fixtures are reproducible across runs. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Synthetic sweep with HDL-64E-like angular coverage, flat n*4 layout. */
function fixtureSweep(n: number, seed: number): Float32Array {
  const rand = mulberry32(seed);
  const out = new Float32Array(n * 4);
  for (let i = 0; i < n; i++) {
    const r = 2 + 78 * rand();
    const az = (2 * rand() - 1) * Math.PI;
    const el = ((-24 + 26 * rand()) * Math.PI) / 180;
    out[i * 4 + 0] = r * Math.cos(el) * Math.cos(az);
    out[i * 4 + 1] = r * Math.cos(el) * Math.sin(az);
    out[i * 4 + 2] = r * Math.sin(el);
    out[i * 4 + 3] = 0.1 + 0.9 * rand();
  }
  return out;
}

function toBuffer(points: Float32Array): Buffer {
  return Buffer.from(points.buffer, points.byteOffset, points.byteLength);
}

const scratch = fs.mkdtempSync(path.join(os.tmpdir(), 'realitygen-golden-'));
afterAll(() => fs.rmSync(scratch, { recursive: true, force: true }));

function cli(args: string[]): void {
  const res = spawnSync(CLI, args, { encoding: 'utf-8' });
  expect(res.status, res.stderr).toBe(0);
}

describe('golden cross-check against the primary CLI', () => {
  it('augment_array matches CLI augment on 10 fixture sweeps', () => {
    for (let k = 0; k < 10; k++) {
      const points = fixtureSweep(3000, 100 + k);
      const inPath = path.join(scratch, `aug_in_${k}.bin`);
      const goldenPath = path.join(scratch, `aug_golden_${k}.bin`);
      fs.writeFileSync(inPath, toBuffer(points));
      cli([
        'augment', '--in', inPath, '--out', goldenPath,
        '--weather', 'snow', '--rate', '10', '--seed', String(7 + k),
      ]);
      const golden = fs.readFileSync(goldenPath);
      const got = augment_array(points, 4, 'snow', 10, 7 + k);
      expect(toBuffer(got).equals(golden)).toBe(true);
    }
  });

  it('project_array matches CLI project dumps on 10 fixture sweeps', () => {
    for (let k = 0; k < 10; k++) {
      const points = fixtureSweep(2000, 200 + k);
      const inPath = path.join(scratch, `proj_in_${k}.bin`);
      const dumpPath = path.join(scratch, `proj_golden_${k}.rimg`);
      const idxPath = path.join(scratch, `proj_golden_${k}.idx`);
      fs.writeFileSync(inPath, toBuffer(points));
      cli([
        'project', '--in', inPath, '--out', dumpPath, '--indices', idxPath,
      ]);
      const golden = fs.readFileSync(dumpPath);
      const image = project_array(points, 4);
      expect(image.height).toBe(64);
      expect(image.width).toBe(1048);
      expect(image.channels).toBe(5);
      const payload = Buffer.from(
        image.block.buffer, image.block.byteOffset, image.block.byteLength,
      );
      expect(payload.equals(golden.subarray(12))).toBe(true);
      const goldenIdx = fs.readFileSync(idxPath);
      const idxBuf = Buffer.from(
        image.indices.buffer, image.indices.byteOffset, image.indices.byteLength,
      );
      expect(idxBuf.equals(goldenIdx)).toBe(true);
    }
  });
});

describe('augment_array', () => {
  it('is deterministic for identical inputs and seed', () => {
    const points = fixtureSweep(2500, 42);
    const a = augment_array(points, 4, 'rain', 5, 3);
    const b = augment_array(points, 4, 'rain', 5, 3);
    expect(toBuffer(a).equals(toBuffer(b))).toBe(true);
  });

  it('degenerates to the projection survivors at vanishing rate', () => {
    const points = fixtureSweep(2000, 7);
    const image = project_array(points, 4);
    const survivors: number[] = [];
    for (const idx of image.indices) if (idx >= 0) survivors.push(idx);
    survivors.sort((a, b) => a - b);

    const out = augment_array(points, 4, 'rain', 1e-12, 9, 'hdl64', {
      alphaOverride: 0,
    });
    expect(out.length).toBe(survivors.length * 4);
    for (let row = 0; row < survivors.length; row++) {
      const src = survivors[row];
      for (let c = 0; c < 4; c++) {
        expect(out[row * 4 + c]).toBe(points[src * 4 + c]);
      }
    }
  });

  it('shrinks but never grows the sweep', () => {
    const points = fixtureSweep(3000, 55);
    const out = augment_array(points, 4, 'snow', 25, 1);
    expect(out.length % 4).toBe(0);
    expect(out.length / 4).toBeLessThanOrEqual(3000);
    expect(out.length / 4).toBeGreaterThan(0);
  });

  it('returns an empty array for empty input', () => {
    expect(augment_array(new Float32Array(0), 4, 'snow', 10, 0).length).toBe(0);
  });

  it('rejects malformed shapes and non-finite values', () => {
    expect(() => augment_array(new Float32Array(10), 4, 'snow', 10, 0)).toThrow(
      /not a multiple/,
    );
    const bad = fixtureSweep(10, 1);
    bad[5] = Number.NaN;
    expect(() => augment_array(bad, 4, 'snow', 10, 0)).toThrow(/non-finite/);
    expect(() =>
      augment_array(fixtureSweep(10, 1), 3 as unknown as 4, 'snow', 10, 0),
    ).toThrow(/4 or 5/);
  });
});

describe('project_array', () => {
  it('maps a single point to one occupied pixel with index 0', () => {
    const single = new Float32Array([10, 0, 0, 0.5]);
    const image = project_array(single, 4);
    let occupied = 0;
    let holder = -1;
    for (const idx of image.indices) {
      if (idx >= 0) {
        occupied++;
        holder = idx;
      }
    }
    expect(occupied).toBe(1);
    expect(holder).toBe(0);
    const maskPlane = image.block.subarray(4 * 64 * 1048, 5 * 64 * 1048);
    let maskCount = 0;
    for (const v of maskPlane) if (v > 0.5) maskCount++;
    expect(maskCount).toBe(1);
  });

  it('returns an all-empty grid for an empty array', () => {
    const image = project_array(new Float32Array(0), 4);
    expect(image.block.every((v) => v === 0)).toBe(true);
    expect(image.indices.every((v) => v === -1)).toBe(true);
  });

  it('rejects unknown profiles', () => {
    expect(() => project_array(fixtureSweep(10, 1), 4, 'vlp128')).toThrow(
      /unknown profile/,
    );
  });
});

describe('version', () => {
  it('reports the primary executable version', () => {
    expect(version()).toMatch(/^\d+\.\d+\.\d+$/);
  });
});

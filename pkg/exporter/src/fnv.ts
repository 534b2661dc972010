/**
 * 64-bit FNV-1a over a byte buffer, computed with 32-bit limbs so the hot
 * loop stays in plain numbers instead of BigInt.
 *
 * The prime 0x100000001b3 splits into hi=0x100, lo=0x1b3; every partial
 * product stays below 2^42 and is therefore exact in a double.
 */

const OFFSET_HI = 0xcbf29ce4;
const OFFSET_LO = 0x84222325;
const PRIME_HI = 0x100;
const PRIME_LO = 0x1b3;
const TWO32 = 0x100000000;

export function fnv1a64(data: Uint8Array): bigint {
  let hi = OFFSET_HI;
  let lo = OFFSET_LO;
  for (let i = 0; i < data.length; i++) {
    lo = (lo ^ data[i]) >>> 0;
    const low = lo * PRIME_LO;
    const carry = Math.floor(low / TWO32);
    const high = hi * PRIME_LO + lo * PRIME_HI + carry;
    lo = low >>> 0;
    hi = high >>> 0;
  }
  return (BigInt(hi) << 32n) | BigInt(lo);
}

export function fnvHex(value: bigint): string {
  return '0x' + value.toString(16).padStart(16, '0');
}

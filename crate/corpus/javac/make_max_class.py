"""Writes Max.class with the layout javac 8 gives

    public class Max {
        static float max(float n1, float n2) {
            if (n1 >= n2) return n1;
            return n2;
        }
    }

minus the constructor, whose aload_0/invokespecial fall outside the
supported opcodes. Pool order, LineNumberTable, StackMapTable and the
SourceFile attribute follow javac's output.
"""

import struct
from pathlib import Path


def u1(v):
    return struct.pack(">B", v)


def u2(v):
    return struct.pack(">H", v)


def u4(v):
    return struct.pack(">I", v)


def utf8(s):
    b = s.encode()
    return u1(1) + u2(len(b)) + b


pool = [
    u1(10) + u2(3) + u2(13),  # 1 Methodref java/lang/Object.<init>:()V
    u1(7) + u2(14),  # 2 Class Max
    u1(7) + u2(15),  # 3 Class java/lang/Object
    utf8("<init>"),  # 4
    utf8("()V"),  # 5
    utf8("Code"),  # 6
    utf8("LineNumberTable"),  # 7
    utf8("max"),  # 8
    utf8("(FF)F"),  # 9
    utf8("StackMapTable"),  # 10
    utf8("SourceFile"),  # 11
    utf8("Max.java"),  # 12
    u1(12) + u2(4) + u2(5),  # 13 NameAndType <init>:()V
    utf8("Max"),  # 14
    utf8("java/lang/Object"),  # 15
]

code = bytes([
    0x22,  # 0 fload_0
    0x23,  # 1 fload_1
    0x95,  # 2 fcmpl
    0x9B, 0x00, 0x05,  # 3 iflt 8
    0x22,  # 6 fload_0
    0xAE,  # 7 freturn
    0x23,  # 8 fload_1
    0xAE,  # 9 freturn
])

line_numbers = u2(7) + u4(2 + 3 * 4) + u2(3) + u2(0) + u2(3) + u2(6) + u2(4) + u2(8) + u2(5)
stack_map = u2(10) + u4(2 + 1) + u2(1) + u1(8)  # same_frame at offset 8
code_body = u2(2) + u2(2) + u4(len(code)) + code + u2(0) + u2(2) + line_numbers + stack_map
code_attr = u2(6) + u4(len(code_body)) + code_body

method = u2(0x0008) + u2(8) + u2(9) + u2(1) + code_attr
source_file = u2(11) + u4(2) + u2(12)

out = (
    u4(0xCAFEBABE) + u2(0) + u2(52)
    + u2(len(pool) + 1) + b"".join(pool)
    + u2(0x0021) + u2(2) + u2(3)
    + u2(0) + u2(0)
    + u2(1) + method
    + u2(1) + source_file
)

Path(__file__).with_name("Max.class").write_bytes(out)

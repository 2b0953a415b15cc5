"""Embedded 8x8 bitmap font covering printable ASCII 32..126.

Each glyph is 8 row bytes, top to bottom; bit 0x80 is the leftmost
column. Classic CGA-style console shapes, kept in-repo as plain data so
rendered text is bit-identical on every platform.
"""

FONT_WIDTH = 8
FONT_HEIGHT = 8

GLYPHS: dict[int, tuple[int, ...]] = {
    32: (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00),   # space
    33: (0x30, 0x30, 0x30, 0x30, 0x30, 0x00, 0x30, 0x00),   # !
    34: (0x6C, 0x6C, 0x48, 0x00, 0x00, 0x00, 0x00, 0x00),   # "
    35: (0x6C, 0x6C, 0xFE, 0x6C, 0xFE, 0x6C, 0x6C, 0x00),   # #
    36: (0x30, 0x7C, 0xC0, 0x78, 0x0C, 0xF8, 0x30, 0x00),   # $
    37: (0x00, 0xC6, 0xCC, 0x18, 0x30, 0x66, 0xC6, 0x00),   # %
    38: (0x38, 0x6C, 0x38, 0x76, 0xDC, 0xCC, 0x76, 0x00),   # &
    39: (0x30, 0x30, 0x60, 0x00, 0x00, 0x00, 0x00, 0x00),   # '
    40: (0x18, 0x30, 0x60, 0x60, 0x60, 0x30, 0x18, 0x00),   # (
    41: (0x60, 0x30, 0x18, 0x18, 0x18, 0x30, 0x60, 0x00),   # )
    42: (0x00, 0x66, 0x3C, 0xFF, 0x3C, 0x66, 0x00, 0x00),   # *
    43: (0x00, 0x30, 0x30, 0xFC, 0x30, 0x30, 0x00, 0x00),   # +
    44: (0x00, 0x00, 0x00, 0x00, 0x00, 0x30, 0x30, 0x60),   # ,
    45: (0x00, 0x00, 0x00, 0xFC, 0x00, 0x00, 0x00, 0x00),   # -
    46: (0x00, 0x00, 0x00, 0x00, 0x00, 0x30, 0x30, 0x00),   # .
    47: (0x06, 0x0C, 0x18, 0x30, 0x60, 0xC0, 0x80, 0x00),   # /
    48: (0x7C, 0xC6, 0xCE, 0xD6, 0xE6, 0xC6, 0x7C, 0x00),   # 0
    49: (0x30, 0x70, 0x30, 0x30, 0x30, 0x30, 0xFC, 0x00),   # 1
    50: (0x78, 0xCC, 0x0C, 0x38, 0x60, 0xCC, 0xFC, 0x00),   # 2
    51: (0x78, 0xCC, 0x0C, 0x38, 0x0C, 0xCC, 0x78, 0x00),   # 3
    52: (0x1C, 0x3C, 0x6C, 0xCC, 0xFE, 0x0C, 0x1E, 0x00),   # 4
    53: (0xFC, 0xC0, 0xF8, 0x0C, 0x0C, 0xCC, 0x78, 0x00),   # 5
    54: (0x38, 0x60, 0xC0, 0xF8, 0xCC, 0xCC, 0x78, 0x00),   # 6
    55: (0xFC, 0xCC, 0x0C, 0x18, 0x30, 0x30, 0x30, 0x00),   # 7
    56: (0x78, 0xCC, 0xCC, 0x78, 0xCC, 0xCC, 0x78, 0x00),   # 8
    57: (0x78, 0xCC, 0xCC, 0x7C, 0x0C, 0x18, 0x70, 0x00),   # 9
    58: (0x00, 0x30, 0x30, 0x00, 0x00, 0x30, 0x30, 0x00),   # :
    59: (0x00, 0x30, 0x30, 0x00, 0x00, 0x30, 0x30, 0x60),   # ;
    60: (0x18, 0x30, 0x60, 0xC0, 0x60, 0x30, 0x18, 0x00),   # <
    61: (0x00, 0x00, 0xFC, 0x00, 0x00, 0xFC, 0x00, 0x00),   # =
    62: (0x60, 0x30, 0x18, 0x0C, 0x18, 0x30, 0x60, 0x00),   # >
    63: (0x78, 0xCC, 0x0C, 0x18, 0x30, 0x00, 0x30, 0x00),   # ?
    64: (0x7C, 0xC6, 0xDE, 0xDE, 0xDE, 0xC0, 0x78, 0x00),   # @
    65: (0x30, 0x78, 0xCC, 0xCC, 0xFC, 0xCC, 0xCC, 0x00),   # A
    66: (0xFC, 0x66, 0x66, 0x7C, 0x66, 0x66, 0xFC, 0x00),   # B
    67: (0x3C, 0x66, 0xC0, 0xC0, 0xC0, 0x66, 0x3C, 0x00),   # C
    68: (0xF8, 0x6C, 0x66, 0x66, 0x66, 0x6C, 0xF8, 0x00),   # D
    69: (0xFE, 0x62, 0x68, 0x78, 0x68, 0x62, 0xFE, 0x00),   # E
    70: (0xFE, 0x62, 0x68, 0x78, 0x68, 0x60, 0xF0, 0x00),   # F
    71: (0x3C, 0x66, 0xC0, 0xC0, 0xCE, 0x66, 0x3E, 0x00),   # G
    72: (0xCC, 0xCC, 0xCC, 0xFC, 0xCC, 0xCC, 0xCC, 0x00),   # H
    73: (0x78, 0x30, 0x30, 0x30, 0x30, 0x30, 0x78, 0x00),   # I
    74: (0x1E, 0x0C, 0x0C, 0x0C, 0xCC, 0xCC, 0x78, 0x00),   # J
    75: (0xE6, 0x66, 0x6C, 0x78, 0x6C, 0x66, 0xE6, 0x00),   # K
    76: (0xF0, 0x60, 0x60, 0x60, 0x62, 0x66, 0xFE, 0x00),   # L
    77: (0xC6, 0xEE, 0xFE, 0xFE, 0xD6, 0xC6, 0xC6, 0x00),   # M
    78: (0xC6, 0xE6, 0xF6, 0xDE, 0xCE, 0xC6, 0xC6, 0x00),   # N
    79: (0x38, 0x6C, 0xC6, 0xC6, 0xC6, 0x6C, 0x38, 0x00),   # O
    80: (0xFC, 0x66, 0x66, 0x7C, 0x60, 0x60, 0xF0, 0x00),   # P
    81: (0x78, 0xCC, 0xCC, 0xCC, 0xDC, 0x78, 0x1C, 0x00),   # Q
    82: (0xFC, 0x66, 0x66, 0x7C, 0x6C, 0x66, 0xE6, 0x00),   # R
    83: (0x78, 0xCC, 0xE0, 0x70, 0x1C, 0xCC, 0x78, 0x00),   # S
    84: (0xFC, 0xB4, 0x30, 0x30, 0x30, 0x30, 0x78, 0x00),   # T
    85: (0xCC, 0xCC, 0xCC, 0xCC, 0xCC, 0xCC, 0xFC, 0x00),   # U
    86: (0xCC, 0xCC, 0xCC, 0xCC, 0xCC, 0x78, 0x30, 0x00),   # V
    87: (0xC6, 0xC6, 0xC6, 0xD6, 0xFE, 0xEE, 0xC6, 0x00),   # W
    88: (0xC6, 0xC6, 0x6C, 0x38, 0x38, 0x6C, 0xC6, 0x00),   # X
    89: (0xCC, 0xCC, 0xCC, 0x78, 0x30, 0x30, 0x78, 0x00),   # Y
    90: (0xFE, 0xC6, 0x8C, 0x18, 0x32, 0x66, 0xFE, 0x00),   # Z
    91: (0x78, 0x60, 0x60, 0x60, 0x60, 0x60, 0x78, 0x00),   # [
    92: (0xC0, 0x60, 0x30, 0x18, 0x0C, 0x06, 0x02, 0x00),   # backslash
    93: (0x78, 0x18, 0x18, 0x18, 0x18, 0x18, 0x78, 0x00),   # ]
    94: (0x10, 0x38, 0x6C, 0xC6, 0x00, 0x00, 0x00, 0x00),   # ^
    95: (0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xFF),   # _
    96: (0x30, 0x30, 0x18, 0x00, 0x00, 0x00, 0x00, 0x00),   # `
    97: (0x00, 0x00, 0x78, 0x0C, 0x7C, 0xCC, 0x76, 0x00),   # a
    98: (0xE0, 0x60, 0x60, 0x7C, 0x66, 0x66, 0xDC, 0x00),   # b
    99: (0x00, 0x00, 0x78, 0xCC, 0xC0, 0xCC, 0x78, 0x00),   # c
    100: (0x1C, 0x0C, 0x0C, 0x7C, 0xCC, 0xCC, 0x76, 0x00),  # d
    101: (0x00, 0x00, 0x78, 0xCC, 0xFC, 0xC0, 0x78, 0x00),  # e
    102: (0x38, 0x6C, 0x60, 0xF0, 0x60, 0x60, 0xF0, 0x00),  # f
    103: (0x00, 0x00, 0x76, 0xCC, 0xCC, 0x7C, 0x0C, 0xF8),  # g
    104: (0xE0, 0x60, 0x6C, 0x76, 0x66, 0x66, 0xE6, 0x00),  # h
    105: (0x30, 0x00, 0x70, 0x30, 0x30, 0x30, 0x78, 0x00),  # i
    106: (0x0C, 0x00, 0x0C, 0x0C, 0x0C, 0xCC, 0xCC, 0x78),  # j
    107: (0xE0, 0x60, 0x66, 0x6C, 0x78, 0x6C, 0xE6, 0x00),  # k
    108: (0x70, 0x30, 0x30, 0x30, 0x30, 0x30, 0x78, 0x00),  # l
    109: (0x00, 0x00, 0xCC, 0xFE, 0xFE, 0xD6, 0xC6, 0x00),  # m
    110: (0x00, 0x00, 0xF8, 0xCC, 0xCC, 0xCC, 0xCC, 0x00),  # n
    111: (0x00, 0x00, 0x78, 0xCC, 0xCC, 0xCC, 0x78, 0x00),  # o
    112: (0x00, 0x00, 0xDC, 0x66, 0x66, 0x7C, 0x60, 0xF0),  # p
    113: (0x00, 0x00, 0x76, 0xCC, 0xCC, 0x7C, 0x0C, 0x1E),  # q
    114: (0x00, 0x00, 0xDC, 0x76, 0x66, 0x60, 0xF0, 0x00),  # r
    115: (0x00, 0x00, 0x7C, 0xC0, 0x78, 0x0C, 0xF8, 0x00),  # s
    116: (0x10, 0x30, 0x7C, 0x30, 0x30, 0x34, 0x18, 0x00),  # t
    117: (0x00, 0x00, 0xCC, 0xCC, 0xCC, 0xCC, 0x76, 0x00),  # u
    118: (0x00, 0x00, 0xCC, 0xCC, 0xCC, 0x78, 0x30, 0x00),  # v
    119: (0x00, 0x00, 0xC6, 0xD6, 0xFE, 0xFE, 0x6C, 0x00),  # w
    120: (0x00, 0x00, 0xC6, 0x6C, 0x38, 0x6C, 0xC6, 0x00),  # x
    121: (0x00, 0x00, 0xCC, 0xCC, 0xCC, 0x7C, 0x0C, 0xF8),  # y
    122: (0x00, 0x00, 0xFC, 0x98, 0x30, 0x64, 0xFC, 0x00),  # z
    123: (0x1C, 0x30, 0x30, 0xE0, 0x30, 0x30, 0x1C, 0x00),  # {
    124: (0x18, 0x18, 0x18, 0x00, 0x18, 0x18, 0x18, 0x00),  # |
    125: (0xE0, 0x30, 0x30, 0x1C, 0x30, 0x30, 0xE0, 0x00),  # }
    126: (0x76, 0xDC, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00),  # ~
}

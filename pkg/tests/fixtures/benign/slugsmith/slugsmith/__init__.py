import re

from unidecode import unidecode

_NON_WORD = re.compile(r"[^a-z0-9]+")


def slugify(text, max_len=80, sep="-"):
    ascii_text = unidecode(text).lower()
    slug = _NON_WORD.sub(sep, ascii_text).strip(sep)
    if len(slug) > max_len:
        slug = slug[:max_len].rsplit(sep, 1)[0]
    return slug

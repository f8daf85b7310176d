//! Append-only ELF64 section rewriting.
//!
//! Embedding never moves existing bytes. The section data, a replacement
//! section-name table and a rebuilt section header table are appended to the
//! end of the file, and only the ELF header fields that locate the section
//! header table are patched. Program headers and every loaded byte stay where
//! they were, so executables keep running.

use super::{BinaryKind, ObjError, ELF_SECTION};

const EHDR_LEN: usize = 64;
const SHDR_LEN: usize = 64;
const SHT_PROGBITS: u32 = 1;
const SHT_STRTAB: u32 = 3;
const SHT_NOBITS: u32 = 8;
const SHN_LORESERVE: usize = 0xff00;
const SHN_XINDEX: u16 = 0xffff;

const E_SHOFF: usize = 0x28;
const E_PHOFF: usize = 0x20;
const E_PHENTSIZE: usize = 0x36;
const E_PHNUM: usize = 0x38;
const E_SHENTSIZE: usize = 0x3a;
const E_SHNUM: usize = 0x3c;
const E_SHSTRNDX: usize = 0x3e;

fn malformed(msg: impl Into<String>) -> ObjError {
    ObjError::Malformed(msg.into())
}

fn u16_at(d: &[u8], off: usize) -> u16 {
    u16::from_le_bytes(d[off..off + 2].try_into().unwrap())
}

fn u32_at(d: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(d[off..off + 4].try_into().unwrap())
}

fn u64_at(d: &[u8], off: usize) -> u64 {
    u64::from_le_bytes(d[off..off + 8].try_into().unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct SectionHeader {
    pub name: u32,
    pub sh_type: u32,
    pub flags: u64,
    pub addr: u64,
    pub offset: u64,
    pub size: u64,
    pub link: u32,
    pub info: u32,
    pub addralign: u64,
    pub entsize: u64,
}

impl SectionHeader {
    fn read(d: &[u8]) -> Self {
        SectionHeader {
            name: u32_at(d, 0),
            sh_type: u32_at(d, 4),
            flags: u64_at(d, 8),
            addr: u64_at(d, 16),
            offset: u64_at(d, 24),
            size: u64_at(d, 32),
            link: u32_at(d, 40),
            info: u32_at(d, 44),
            addralign: u64_at(d, 48),
            entsize: u64_at(d, 56),
        }
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.name.to_le_bytes());
        out.extend_from_slice(&self.sh_type.to_le_bytes());
        out.extend_from_slice(&self.flags.to_le_bytes());
        out.extend_from_slice(&self.addr.to_le_bytes());
        out.extend_from_slice(&self.offset.to_le_bytes());
        out.extend_from_slice(&self.size.to_le_bytes());
        out.extend_from_slice(&self.link.to_le_bytes());
        out.extend_from_slice(&self.info.to_le_bytes());
        out.extend_from_slice(&self.addralign.to_le_bytes());
        out.extend_from_slice(&self.entsize.to_le_bytes());
    }

    fn data<'a>(&self, file: &'a [u8]) -> Result<&'a [u8], ObjError> {
        if self.sh_type == SHT_NOBITS {
            return Ok(&[]);
        }
        let start =
            usize::try_from(self.offset).map_err(|_| malformed("section offset overflow"))?;
        let len = usize::try_from(self.size).map_err(|_| malformed("section size overflow"))?;
        start
            .checked_add(len)
            .and_then(|end| file.get(start..end))
            .ok_or_else(|| {
                malformed(format!(
                    "section data {:#x}+{:#x} beyond end of file ({:#x})",
                    self.offset,
                    self.size,
                    file.len()
                ))
            })
    }
}

/// Section header table of a validated ELF64 little-endian file.
#[derive(Debug)]
pub(crate) struct ElfLayout {
    pub shoff: usize,
    pub sections: Vec<SectionHeader>,
    /// 0 when the file has no section-name table.
    pub shstrndx: usize,
}

impl ElfLayout {
    pub fn parse(data: &[u8]) -> Result<Self, ObjError> {
        match super::detect(data) {
            BinaryKind::Elf64 => {}
            kind => return Err(ObjError::Unsupported(kind.to_string())),
        }
        if data.len() < EHDR_LEN {
            return Err(malformed("truncated ELF header"));
        }
        if data[5] != 1 {
            return Err(ObjError::Unsupported("big-endian ELF64".into()));
        }
        let shoff = usize::try_from(u64_at(data, E_SHOFF))
            .map_err(|_| malformed("section header offset overflow"))?;
        let shentsize = usize::from(u16_at(data, E_SHENTSIZE));
        let mut shnum = usize::from(u16_at(data, E_SHNUM));
        let mut shstrndx = usize::from(u16_at(data, E_SHSTRNDX));

        if shoff == 0 {
            if shnum != 0 {
                return Err(malformed("section count without a section header table"));
            }
            return Ok(ElfLayout {
                shoff: 0,
                sections: Vec::new(),
                shstrndx: 0,
            });
        }
        if shentsize != SHDR_LEN {
            return Err(malformed(format!(
                "section header size {shentsize}, expected 64"
            )));
        }
        if shoff < EHDR_LEN {
            return Err(malformed("section header table overlaps ELF header"));
        }
        let first = data
            .get(shoff..shoff.saturating_add(SHDR_LEN))
            .ok_or_else(|| {
                malformed(format!(
                    "section header offset {shoff:#x} beyond end of file"
                ))
            })?;
        let first = SectionHeader::read(first);
        if shnum == 0 {
            shnum = usize::try_from(first.size).map_err(|_| malformed("section count overflow"))?;
        }
        if shstrndx == usize::from(SHN_XINDEX) {
            shstrndx = first.link as usize;
        }
        let table_len = shnum
            .checked_mul(SHDR_LEN)
            .ok_or_else(|| malformed("section count overflow"))?;
        let table = shoff
            .checked_add(table_len)
            .and_then(|end| data.get(shoff..end))
            .ok_or_else(|| malformed("section header table extends beyond end of file"))?;

        let phoff = u64_at(data, E_PHOFF);
        let phnum = u64::from(u16_at(data, E_PHNUM));
        let phentsize = u64::from(u16_at(data, E_PHENTSIZE));
        if phoff != 0 && phnum != 0 {
            let ph_end = phoff.saturating_add(phnum.saturating_mul(phentsize));
            let sh_end = (shoff + table_len) as u64;
            if phoff < sh_end && (shoff as u64) < ph_end {
                return Err(malformed("section header table overlaps program headers"));
            }
        }

        let sections: Vec<_> = table
            .chunks_exact(SHDR_LEN)
            .map(SectionHeader::read)
            .collect();
        if shstrndx >= sections.len() && !(shstrndx == 0 && sections.is_empty()) {
            return Err(malformed(format!(
                "section name table index {shstrndx} out of range ({} sections)",
                sections.len()
            )));
        }
        if shstrndx != 0 {
            sections[shstrndx].data(data)?;
        }
        Ok(ElfLayout {
            shoff,
            sections,
            shstrndx,
        })
    }

    fn name_table<'a>(&self, data: &'a [u8]) -> Result<&'a [u8], ObjError> {
        if self.shstrndx == 0 {
            return Ok(&[]);
        }
        self.sections[self.shstrndx].data(data)
    }

    pub fn section_name<'a>(
        &self,
        data: &'a [u8],
        sh: &SectionHeader,
    ) -> Result<&'a [u8], ObjError> {
        let table = self.name_table(data)?;
        if self.shstrndx == 0 && sh.name == 0 {
            return Ok(&[]);
        }
        let start = sh.name as usize;
        let tail = table
            .get(start..)
            .ok_or_else(|| malformed(format!("section name offset {start} outside name table")))?;
        let end = tail
            .iter()
            .position(|&b| b == 0)
            .ok_or_else(|| malformed("unterminated section name"))?;
        Ok(&tail[..end])
    }

    pub fn find(&self, data: &[u8], name: &str) -> Result<Option<usize>, ObjError> {
        for (i, sh) in self.sections.iter().enumerate().skip(1) {
            if self.section_name(data, sh)? == name.as_bytes() {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

pub(crate) fn extract(data: &[u8]) -> Result<Option<&[u8]>, ObjError> {
    let layout = ElfLayout::parse(data)?;
    match layout.find(data, ELF_SECTION)? {
        Some(i) => Ok(Some(layout.sections[i].data(data)?)),
        None => Ok(None),
    }
}

pub(crate) fn embed(data: &[u8], abom: &[u8]) -> Result<Vec<u8>, ObjError> {
    let layout = ElfLayout::parse(data)?;
    let existing = layout.find(data, ELF_SECTION)?;

    let mut out = data.to_vec();
    let data_off = out.len() as u64;
    out.extend_from_slice(abom);

    if let Some(i) = existing {
        // Redirect the existing header entry; the old bytes become dead space.
        let entry = layout.shoff + i * SHDR_LEN;
        out[entry + 24..entry + 32].copy_from_slice(&data_off.to_le_bytes());
        out[entry + 32..entry + 40].copy_from_slice(&(abom.len() as u64).to_le_bytes());
        return Ok(out);
    }

    let mut sections = layout.sections.clone();
    if sections.is_empty() {
        sections.push(SectionHeader::read(&[0u8; SHDR_LEN]));
    }
    let mut shstrndx = layout.shstrndx;
    let mut names = layout.name_table(data)?.to_vec();
    if names.is_empty() {
        names.push(0);
    }
    if names.last() != Some(&0) {
        names.push(0);
    }
    let abom_name = names.len() as u32;
    names.extend_from_slice(ELF_SECTION.as_bytes());
    names.push(0);
    if shstrndx == 0 {
        let strtab_name = names.len() as u32;
        names.extend_from_slice(b".shstrtab\0");
        sections.push(SectionHeader {
            name: strtab_name,
            sh_type: SHT_STRTAB,
            flags: 0,
            addr: 0,
            offset: 0,
            size: 0,
            link: 0,
            info: 0,
            addralign: 1,
            entsize: 0,
        });
        shstrndx = sections.len() - 1;
    }
    let names_off = out.len() as u64;
    out.extend_from_slice(&names);
    sections[shstrndx].offset = names_off;
    sections[shstrndx].size = names.len() as u64;

    sections.push(SectionHeader {
        name: abom_name,
        sh_type: SHT_PROGBITS,
        flags: 0,
        addr: 0,
        offset: data_off,
        size: abom.len() as u64,
        link: 0,
        info: 0,
        addralign: 1,
        entsize: 0,
    });

    let count = sections.len();
    let e_shnum = if count >= SHN_LORESERVE {
        sections[0].size = count as u64;
        0
    } else {
        count as u16
    };
    let e_shstrndx = if shstrndx >= SHN_LORESERVE {
        sections[0].link = shstrndx as u32;
        SHN_XINDEX
    } else {
        shstrndx as u16
    };

    while !out.len().is_multiple_of(8) {
        out.push(0);
    }
    let shoff = out.len() as u64;
    for sh in &sections {
        sh.write(&mut out);
    }
    out[E_SHOFF..E_SHOFF + 8].copy_from_slice(&shoff.to_le_bytes());
    out[E_SHENTSIZE..E_SHENTSIZE + 2].copy_from_slice(&(SHDR_LEN as u16).to_le_bytes());
    out[E_SHNUM..E_SHNUM + 2].copy_from_slice(&e_shnum.to_le_bytes());
    out[E_SHSTRNDX..E_SHSTRNDX + 2].copy_from_slice(&e_shstrndx.to_le_bytes());
    Ok(out)
}

/// Number of sections, honoring extended numbering.
pub(crate) fn section_count(data: &[u8]) -> Result<usize, ObjError> {
    Ok(ElfLayout::parse(data)?.sections.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal ELF64 header with no sections or segments.
    fn bare_elf() -> Vec<u8> {
        let mut h = vec![0u8; EHDR_LEN];
        h[..4].copy_from_slice(b"\x7fELF");
        h[4] = 2;
        h[5] = 1;
        h[6] = 1;
        h[16] = 1; // ET_REL
        h[18] = 62; // EM_X86_64
        h[20] = 1;
        h[0x34] = EHDR_LEN as u8;
        h
    }

    #[test]
    fn embeds_into_sectionless_file() {
        let elf = bare_elf();
        let out = embed(&elf, b"ABOMpayload").unwrap();
        assert_eq!(extract(&out).unwrap(), Some(&b"ABOMpayload"[..]));
        let layout = ElfLayout::parse(&out).unwrap();
        assert_eq!(layout.sections.len(), 3);
        assert_eq!(
            layout
                .section_name(&out, &layout.sections[layout.shstrndx])
                .unwrap(),
            b".shstrtab"
        );
        assert_eq!(&out[..E_SHOFF], &elf[..E_SHOFF]);
    }

    #[test]
    fn rejects_header_level_damage() {
        let mut elf = bare_elf();
        elf[E_SHOFF..E_SHOFF + 8].copy_from_slice(&0x1000u64.to_le_bytes());
        elf[E_SHNUM] = 1;
        elf[E_SHENTSIZE] = 64;
        assert!(matches!(extract(&elf), Err(ObjError::Malformed(_))));

        let mut big_endian = bare_elf();
        big_endian[5] = 2;
        assert!(matches!(
            extract(&big_endian),
            Err(ObjError::Unsupported(_))
        ));
    }

    #[test]
    fn extended_section_numbering_is_read() {
        let elf = bare_elf();
        let out = embed(&elf, b"x").unwrap();
        // Rewrite e_shnum into the section-0 size field.
        let mut ext = out.clone();
        let shoff = u64_at(&ext, E_SHOFF) as usize;
        ext[shoff + 32..shoff + 40].copy_from_slice(&3u64.to_le_bytes());
        ext[E_SHNUM..E_SHNUM + 2].copy_from_slice(&0u16.to_le_bytes());
        assert_eq!(section_count(&ext).unwrap(), 3);
        assert_eq!(extract(&ext).unwrap(), Some(&b"x"[..]));
    }
}
